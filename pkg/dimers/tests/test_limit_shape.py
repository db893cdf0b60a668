import math

import numpy as np
from django.test import SimpleTestCase, tag

from dimers.amoeba import surface_tension_honeycomb
from dimers.exceptions import InfeasibleInput, MalformedSpec
from dimers.kasteleyn import float_edge_probabilities, kasteleyn_matrix
from dimers.limit_shape import (
    FACETS,
    HEXAGON_CURVE,
    SlopeField,
    TangencyPolygon,
    burgers_residual,
    burgers_solve,
    burgers_solve_volume,
    curl_residual,
    curve,
    facet_label,
    fit_circle,
    fit_tangency_curve,
    from_plane,
    frozen_boundary,
    heart_polygon,
    height_from_slopefield,
    hexagon_boundary_heights,
    hexagon_polygon,
    linear_boundary_heights,
    matching_volume_curve,
    minimize_surface_tension,
    polygon_from_json,
    sigma,
    slope_field,
    surface_tension_functional,
    tangency_residuals,
    to_plane,
)
from dimers.regions import hexagon


class CoordinateTests(SimpleTestCase):
    def test_round_trip(self):
        points = np.array([[0.3, -1.2], [2.0, 5.0]])
        np.testing.assert_allclose(from_plane(to_plane(points)), points)

    def test_sigma_matches_the_amoeba_formula(self):
        self.assertAlmostEqual(float(sigma(0.2, 0.3)), surface_tension_honeycomb(0.2, 0.3), delta=1e-9)


class PolygonTests(SimpleTestCase):
    def test_regular_hexagon(self):
        polygon = hexagon_polygon(1, 1, 1)
        self.assertEqual(polygon.degree, 2)
        self.assertEqual(len(polygon.classes), 6)
        self.assertAlmostEqual(polygon.area, 3.0)
        radii = np.hypot(*to_plane(np.array(polygon.vertices)).T)
        np.testing.assert_allclose(radii, 1.0)

    def test_heart_has_nine_sides(self):
        self.assertEqual(heart_polygon().degree, 3)

    def test_vertex_count_must_be_a_multiple_of_three(self):
        with self.assertRaises(MalformedSpec):
            TangencyPolygon(((0, 0), (1, 0), (1, 1), (0, 1)))

    def test_edges_must_follow_the_lattice(self):
        with self.assertRaises(MalformedSpec):
            TangencyPolygon(((0, 0), (1, 0), (0, 1)))

    def test_document(self):
        polygon = hexagon_polygon(2, 1, 1)
        self.assertEqual(polygon_from_json(polygon.to_json()).vertices, polygon.vertices)
        self.assertEqual(polygon_from_json({"hexagon": [2, 1, 1]}).vertices, polygon.vertices)
        with self.assertRaises(MalformedSpec):
            polygon_from_json({"corners": []})

    def test_bad_hexagon(self):
        with self.assertRaises(MalformedSpec):
            hexagon_polygon(0, 0, 0)


class TangencyFitTests(SimpleTestCase):
    def test_hexagon_curve(self):
        fit = fit_tangency_curve(hexagon_polygon(1, 1, 1))
        self.assertLess(fit.residual, 1e-8)
        self.assertEqual(fit.curve.degree, 2)
        reference = curve(HEXAGON_CURVE).coefficients
        fitted = fit.curve.coefficients
        scale = fitted[(0, 0)] / reference[(0, 0)]
        self.assertEqual(set(fitted), set(reference))
        for key, value in reference.items():
            self.assertAlmostEqual(fitted[key], scale * value, delta=1e-9)

    def test_heart_curve_is_a_cubic(self):
        fit = fit_tangency_curve(heart_polygon())
        self.assertEqual(fit.curve.degree, 3)
        self.assertLess(fit.residual, 1e-6)
        self.assertEqual(len(fit.singular_values), 9)


class BurgersTests(SimpleTestCase):
    def test_centre_of_the_hexagon(self):
        point = burgers_solve(HEXAGON_CURVE, 0.0, 0.0)
        self.assertFalse(point.frozen)
        self.assertAlmostEqual(point.s, 1 / 3)
        self.assertAlmostEqual(point.t, 1 / 3)
        self.assertAlmostEqual(point.w, -1 - point.z)

    def test_frozen_corner(self):
        point = burgers_solve(HEXAGON_CURVE, 0.95, 0.0)
        self.assertTrue(point.frozen)
        self.assertIn((point.s, point.t), FACETS.values())

    def test_residuals_vanish(self):
        for x, y in ((0.1, 0.2), (-0.3, 0.0), (0.2, -0.4)):
            with self.subTest(x=x, y=y):
                self.assertLess(abs(burgers_residual(HEXAGON_CURVE, x, y)), 1e-5)
                self.assertLess(abs(curl_residual(HEXAGON_CURVE, x, y)), 1e-5)

    def test_facet_label(self):
        self.assertEqual([facet_label(w) for w in (0.5, -0.5, -2.0)], ["left", "middle", "right"])

    def test_residual_needs_a_liquid_point(self):
        with self.assertRaises(MalformedSpec):
            burgers_residual(HEXAGON_CURVE, 0.95, 0.0)

    def test_volume_multiplier(self):
        with self.assertRaises(MalformedSpec):
            burgers_solve_volume(HEXAGON_CURVE, 0, 0.0, 0.0)
        with self.assertRaises(MalformedSpec):
            matching_volume_curve(HEXAGON_CURVE, 0)
        self.assertEqual(matching_volume_curve(HEXAGON_CURVE, 0.5).c, 0.5)

    def test_curves_are_polynomials(self):
        with self.assertRaises(MalformedSpec):
            curve("1 + 1/z")


class FrozenBoundaryTests(SimpleTestCase):
    def setUp(self):
        self.polygon = hexagon_polygon(1, 1, 1)

    def test_inscribed_circle(self):
        boundary = frozen_boundary(HEXAGON_CURVE, self.polygon, grid=121)
        self.assertFalse(boundary.is_empty)
        centre, radius = fit_circle(to_plane(boundary.points))
        self.assertAlmostEqual(radius, math.sqrt(3) / 2, delta=0.02)
        self.assertAlmostEqual(centre[0], 0.0, delta=0.02)
        self.assertAlmostEqual(centre[1], 0.0, delta=0.02)

    def test_touches_every_side(self):
        boundary = frozen_boundary(HEXAGON_CURVE, self.polygon, grid=121)
        spacing = 2 / 120
        for residual in tangency_residuals(boundary, self.polygon):
            self.assertLess(residual, spacing / 2)

    def test_fit_circle(self):
        angles = np.linspace(0, 2 * math.pi, 40, endpoint=False)
        points = np.column_stack([1 + 2 * np.cos(angles), -1 + 2 * np.sin(angles)])
        centre, radius = fit_circle(points)
        self.assertAlmostEqual(radius, 2.0)
        self.assertAlmostEqual(centre[0], 1.0)
        self.assertAlmostEqual(centre[1], -1.0)


class SlopeFieldTests(SimpleTestCase):
    def test_hexagon_field(self):
        field = slope_field(HEXAGON_CURVE, hexagon_polygon(1, 1, 1), grid=41)
        self.assertTrue(field.liquid.any())
        self.assertTrue(field.frozen.any())
        self.assertTrue(np.all(field.facet[field.frozen] >= 0))
        self.assertFalse((field.liquid & ~field.inside).any())

    def test_small_grids_are_refused(self):
        with self.assertRaises(MalformedSpec):
            slope_field(HEXAGON_CURVE, hexagon_polygon(1, 1, 1), grid=2)

    def test_linear_field_integrates_exactly(self):
        xs = np.linspace(0, 1, 11)
        ys = np.linspace(0, 1, 11)
        shape = (len(ys), len(xs))
        field = SlopeField(
            xs=xs,
            ys=ys,
            s=np.full(shape, 0.2),
            t=np.full(shape, 0.5),
            z=np.full(shape, np.nan + 0j),
            liquid=np.ones(shape, dtype=bool),
            inside=np.ones(shape, dtype=bool),
            facet=np.full(shape, -1),
            curve=curve(HEXAGON_CURVE),
        )
        surface = height_from_slopefield(field, (0.0, 0.0), base_value=1.0)
        self.assertLess(surface.residual, 1e-12)
        self.assertAlmostEqual(surface.at(1.0, 1.0), 1.7)

    def test_hexagon_heights(self):
        field = slope_field(HEXAGON_CURVE, hexagon_polygon(1, 1, 1), grid=41)
        surface = height_from_slopefield(field, (0.0, 0.0), tol=0.2)
        self.assertEqual(surface.at(0.0, 0.0), 0.0)
        self.assertTrue(np.isfinite(surface.h[field.liquid]).all())


class MinimizerTests(SimpleTestCase):
    def test_hexagon(self):
        polygon = hexagon_polygon(1, 1, 1)
        boundary = hexagon_boundary_heights(polygon)
        result = minimize_surface_tension(polygon, boundary, 0.25)
        self.assertLessEqual(result.objective, result.history[0] + 1e-9)
        s, t = result.slopes[:, 0], result.slopes[:, 1]
        self.assertTrue(np.all(s >= -1e-6))
        self.assertTrue(np.all(t >= -1e-6))
        self.assertTrue(np.all(s + t <= 1 + 1e-6))
        for k in np.flatnonzero(result.boundary):
            x, y = result.vertices[k]
            self.assertAlmostEqual(result.heights[k], boundary(x, y))
        # central symmetry sends h to -1 - h
        self.assertAlmostEqual(float(result.height_at(0.0, 0.0)), -0.5, delta=5e-3)

    def test_planar_boundary_stays_planar(self):
        result = minimize_surface_tension(hexagon_polygon(1, 1, 1), linear_boundary_heights(1 / 3, 1 / 3), 0.5)
        self.assertAlmostEqual(float(result.height_at(0.25, 0.5)), 0.25, delta=1e-4)
        s, t = result.slope_at(0.1, 0.05)
        self.assertAlmostEqual(s, 1 / 3, delta=1e-4)
        self.assertAlmostEqual(t, 1 / 3, delta=1e-4)

    def test_steep_boundary_has_no_spanning_surface(self):
        with self.assertRaises(InfeasibleInput):
            minimize_surface_tension(hexagon_polygon(1, 1, 1), linear_boundary_heights(2, 0), 0.5)

    def test_mesh_size(self):
        with self.assertRaises(MalformedSpec):
            minimize_surface_tension(hexagon_polygon(1, 1, 1), linear_boundary_heights(0, 0), 0)


@tag("slow")
class HexagonLimitShapeTests(SimpleTestCase):
    """The regular hexagon three ways: complex Burgers, surface-tension minimisation and Kasteleyn marginals."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.polygon = hexagon_polygon(1, 1, 1)
        cls.field = slope_field(HEXAGON_CURVE, cls.polygon, grid=601)
        boundary = hexagon_boundary_heights(cls.polygon)
        cls.minimizers = {size: minimize_surface_tension(cls.polygon, boundary, size) for size in (0.2, 0.1, 0.05)}

    def test_fine_minimiser_is_flat_at_the_centre(self):
        s, t = self.minimizers[0.05].slope_at(0.01, 0.02)
        self.assertAlmostEqual(s, 1 / 3, delta=0.05)
        self.assertAlmostEqual(t, 1 / 3, delta=0.05)

    def test_burgers_equation_holds_on_a_fine_grid(self):
        xs = np.linspace(-1.0, 1.0, 200)
        X, Y = np.meshgrid(xs, xs)
        radius = np.hypot(*to_plane(np.stack([X, Y], axis=-1)).transpose(2, 0, 1))
        # liquid disc has radius sqrt(3) / 2; keep clear of the square-root edge
        interior = self.polygon.contains(X, Y) & (radius < 0.75)
        worst = max(abs(burgers_residual(HEXAGON_CURVE, x, y)) for x, y in zip(X[interior], Y[interior]))
        self.assertLessEqual(worst, 1e-3)

    def test_burgers_heights_match_the_minimiser(self):
        result = self.minimizers[0.1]
        field = slope_field(HEXAGON_CURVE, self.polygon, grid=201)
        surface = height_from_slopefield(field, (0.0, 0.0), base_value=float(result.height_at(0.0, 0.0)), tol=0.2)
        gaps = []
        for k in np.flatnonzero(~result.boundary):
            x, y = result.vertices[k]
            value = surface.at(x, y)
            if math.isfinite(value):
                gaps.append(abs(value - result.heights[k]))
        self.assertGreater(len(gaps), 100)
        self.assertLessEqual(max(gaps), 2 * result.mesh_size)

    def test_burgers_objective_is_the_hexagon_entropy(self):
        objective = surface_tension_functional(self.field)
        # per n^2, log of the number of lozenge tilings of the n, n, n hexagon
        entropy = 4.5 * math.log(3) - 6 * math.log(2)
        self.assertLess(abs(objective + entropy), 1e-3 * entropy)

    def test_minimiser_objective_converges_to_the_burgers_objective(self):
        target = surface_tension_functional(self.field)
        coarse, middle, fine = (self.minimizers[size].objective for size in (0.2, 0.1, 0.05))
        # each mesh refines the last, so the minima decrease toward the continuum value
        self.assertGreaterEqual(coarse, middle - 1e-9)
        self.assertGreaterEqual(middle, fine - 1e-9)
        self.assertGreater(fine, target - 1e-3 * abs(target))
        ratio = (middle - fine) / (coarse - middle)
        extrapolated = fine - (middle - fine) * ratio / (1 - ratio)
        self.assertLess(abs(extrapolated - target), 1e-3 * abs(target))

    def test_kasteleyn_densities_follow_the_slope_field(self):
        n = 40
        g = hexagon(n, n, n)
        probabilities = float_edge_probabilities(kasteleyn_matrix(g))
        whites = np.array(g.white_positions)
        blacks = np.array(g.black_positions)
        centre = np.vstack([whites, blacks]).mean(axis=0)
        middles = np.array([(whites[e.white] + blacks[e.black]) / 2 for e in g.edges])
        scaled = (middles - centre) / n
        labels = np.array([e.label for e in g.edges])
        width = 0.1
        gaps = []
        for cx in np.arange(-0.6, 0.6 + 1e-9, width):
            for cy in np.arange(-0.6, 0.6 + 1e-9, width):
                if math.hypot(cx, cy) > 0.6:
                    continue
                point = burgers_solve(HEXAGON_CURVE, *from_plane(np.array([cx, cy])))
                if point.frozen:
                    continue
                box = (np.abs(scaled[:, 0] - cx) <= width / 2) & (np.abs(scaled[:, 1] - cy) <= width / 2)
                # the mean probability of a labelled edge is the density of that lozenge
                found = sorted(float(probabilities[box & (labels == label)].mean()) for label in "abc")
                expected = sorted((point.s, point.t, 1 - point.s - point.t))
                gaps.append(sum(abs(a - b) for a, b in zip(found, expected)))
        self.assertGreater(len(gaps), 50)
        self.assertLessEqual(float(np.mean(gaps)), 0.05)
