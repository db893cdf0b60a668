import math

import numpy as np
from django.test import SimpleTestCase, tag

from dimers.exceptions import InfeasibleInput, MalformedSpec
from dimers.fluctuations import (
    MomentEstimate,
    column_kernel,
    column_probability,
    column_variance,
    column_variance_trace,
    edge_probability_infinite,
    empirical_moment,
    gff_covariance,
    gff_second_moment,
    green_expansion,
    green_function,
    kinv_asymptotic,
    kinv_infinite,
    nearest_face,
    pairings,
    torus_kinv,
    variance_log_fit,
    wick_comparison,
    wick_fourth_moment,
    wick_moment,
)
from dimers.graphs import torus_cover
from dimers.kasteleyn import float_edges_probability, float_inverse, kasteleyn_matrix
from dimers.regions import hexagon, honeycomb_domain
from dimers.sampler import METHOD_GLAUBER, sample_batch


def _centre_column(g):
    """a-edges on the line through the centre of a regular hexagon perpendicular to them, by column offset."""
    whites = np.array(g.white_positions)
    blacks = np.array(g.black_positions)
    centre = np.vstack([whites, blacks]).mean(axis=0)
    along = np.array([math.sqrt(3) / 2, 0.5])
    across = np.array([0.5, -math.sqrt(3) / 2])
    column = {}
    for k, edge in enumerate(g.edges):
        middle = (whites[edge.white] + blacks[edge.black]) / 2 - centre
        if edge.label == "a" and abs(middle @ along) < 1e-6:
            column[int(round(middle @ across + 0.5))] = k
    return column


def _face_point(g, index) -> complex:
    face = next(f for f in g.faces if f.index == index)
    x, y = g.face_centroid(face)
    return complex(x, y)


class InfiniteKernelTests(SimpleTestCase):
    def test_uniform_edge_probability(self):
        self.assertAlmostEqual(edge_probability_infinite(1, 1, 1), 1 / 3)
        self.assertAlmostEqual(kinv_infinite(0, 0), 1 / 3, delta=1e-6)

    def test_frozen_weights(self):
        self.assertEqual(edge_probability_infinite(3, 1, 1), 1.0)
        self.assertEqual(edge_probability_infinite(1, 3, 1), 0.0)

    def test_weighted_probability_is_an_angle(self):
        self.assertAlmostEqual(
            edge_probability_infinite(2, 3, 4),
            math.acos((9 + 16 - 4) / (2 * 3 * 4)) / math.pi,
        )

    def test_torus_limit(self):
        for x, y in ((2, 3), (-1, 2), (0, 1)):
            with self.subTest(x=x, y=y):
                self.assertAlmostEqual(kinv_infinite(x, y), torus_kinv(200, 1, 1, 1, x, y), delta=2e-3)

    def test_weighted_torus_limit(self):
        self.assertAlmostEqual(kinv_infinite(1, 1, 1.0, 1.5, 2.0), torus_kinv(200, 1.0, 1.5, 2.0, 1, 1), delta=2e-3)

    def test_diagonal_values(self):
        self.assertAlmostEqual(kinv_infinite(1, 1), -math.sin(math.pi / 3) / math.pi, delta=1e-6)
        kernel = column_kernel(math.pi / 3, 4)
        for k in range(5):
            with self.subTest(k=k):
                self.assertAlmostEqual(kinv_infinite(k, k), kernel.diagonal(k), delta=1e-6)
                self.assertAlmostEqual(abs(kinv_infinite(k, k)), abs(kernel.entry(k)), delta=1e-6)

    def test_torus_diagonal_converges_to_the_column_kernel(self):
        kernel = column_kernel(math.pi / 3, 3)
        errors = []
        for n in (12, 24, 48, 96):
            errors.append(max(abs(torus_kinv(n, 1, 1, 1, k, k) - kernel.diagonal(k)) for k in range(4)))
        self.assertEqual(errors, sorted(errors, reverse=True))
        self.assertLess(errors[-1], 1e-2)

    def test_asymptotic_form(self):
        exact = kinv_infinite(20, 30)
        self.assertAlmostEqual(kinv_asymptotic(20, 30), exact, delta=2e-3)

    def test_asymptotic_error_shrinks_along_a_ray(self):
        # multiples of 3 keep the phase e^(-2 pi i (x + y) / 3) fixed along the ray
        errors, values = [], []
        for x, y in ((6, 9), (12, 18), (24, 36)):
            exact = kinv_infinite(x, y)
            values.append(exact)
            errors.append(abs(kinv_asymptotic(x, y) - exact))
        self.assertLess(errors[1], errors[0])
        self.assertLess(errors[2], errors[1])
        self.assertLess(errors[2], 0.1 * abs(values[2]))

    def test_bad_arguments(self):
        with self.assertRaises(MalformedSpec):
            kinv_asymptotic(0, 0)
        with self.assertRaises(MalformedSpec):
            kinv_infinite(1, 1, 0, 1, 1)
        with self.assertRaises(MalformedSpec):
            torus_kinv(0, 1, 1, 1, 0, 0)
        with self.assertRaises(MalformedSpec):
            torus_kinv(3, 1, 1, 1, 0, 0, twist=(2, 1))

    def test_singular_twist(self):
        with self.assertRaises(InfeasibleInput):
            torus_kinv(3, 1, 1, 1, 0, 0, twist=(1, 1))


class ColumnTests(SimpleTestCase):
    def test_single_offset(self):
        self.assertAlmostEqual(column_probability(math.pi / 3, [5]), 1 / 3)
        self.assertEqual(column_probability(math.pi / 3, []), 1.0)

    def test_pair_of_offsets(self):
        kernel = column_kernel(math.pi / 3, 2)
        expected = kernel.entry(0) ** 2 - kernel.entry(2) ** 2
        self.assertAlmostEqual(column_probability(math.pi / 3, [0, 2]), expected)

    def test_three_consecutive_offsets(self):
        kernel = column_kernel(math.pi / 3, 2)
        k0, k1, k2 = (kernel.diagonal(d) for d in range(3))
        expected = np.linalg.det(np.array([[k0, k1, k2], [k1, k0, k1], [k2, k1, k0]]))
        value = column_probability(math.pi / 3, [0, 1, 2])
        self.assertAlmostEqual(value, expected)
        self.assertGreater(value, 0.0)
        self.assertLess(value, column_probability(math.pi / 3, [0, 1]))

    def test_probabilities_stay_in_range(self):
        for theta in (0.4, math.pi / 3, 2.0):
            for offsets in ([0, 1, 2], [0, 1, 3], [0, 2, 4], [-1, 0, 1, 2]):
                with self.subTest(theta=theta, offsets=offsets):
                    value = column_probability(theta, offsets)
                    self.assertGreaterEqual(value, -1e-12)
                    self.assertLessEqual(value, theta / math.pi)

    @tag("slow")
    def test_centre_of_a_large_hexagon(self):
        g = hexagon(30, 30, 30)
        K = kasteleyn_matrix(g)
        inverse = float_inverse(K)
        column = _centre_column(g)
        for offsets in ((0,), (0, 1), (-1, 1), (0, 2), (-1, 0, 1), (-1, 0, 2), (0, 1, 2)):
            with self.subTest(offsets=offsets):
                finite = float_edges_probability(K, [column[d] for d in offsets], inverse)
                self.assertAlmostEqual(column_probability(math.pi / 3, offsets), finite, delta=5e-3)

    def test_repeated_offsets(self):
        with self.assertRaises(MalformedSpec):
            column_probability(1.0, [1, 1])

    def test_closed_form_matches_trace(self):
        for theta, k in ((math.pi / 3, 7), (1.0, 20), (2.5, 3)):
            with self.subTest(theta=theta, k=k):
                self.assertAlmostEqual(column_variance(theta, k), column_variance_trace(theta, k), delta=1e-10)

    def test_kernel_range(self):
        with self.assertRaises(MalformedSpec):
            column_kernel(4.0, 2)
        with self.assertRaises(MalformedSpec):
            column_variance(1.0, 0)

    def test_logarithmic_growth(self):
        fit = variance_log_fit(math.pi / 3, [100, 300, 1000, 3000, 10000])
        self.assertAlmostEqual(fit.slope, 1 / math.pi**2, delta=2e-3)


class GaussianFreeFieldTests(SimpleTestCase):
    def test_green_function(self):
        self.assertEqual(green_function(0, 1), 0.0)
        self.assertAlmostEqual(green_function(0, math.exp(-1)), 1 / (2 * math.pi))
        with self.assertRaises(MalformedSpec):
            green_function(1j, 1j)

    def test_harmonic_configuration(self):
        self.assertAlmostEqual(gff_second_moment(1, -1, 1j, -1j), 0.0)

    def test_coincident_points(self):
        self.assertEqual(gff_second_moment(2, 2, 0, 1j), 0.0)
        with self.assertRaises(MalformedSpec):
            gff_second_moment(0, 1, 1, 2j)

    def test_green_expansion(self):
        points = (0, 1, 3 + 1j, 4 - 2j)
        self.assertAlmostEqual(green_expansion(*points), math.pi * gff_second_moment(*points))

    def test_nested_increments_are_positive(self):
        self.assertGreater(gff_second_moment(-2, 2, -1, 1), 0.0)

    def test_second_moment_is_translation_invariant(self):
        points = (-5, 5, -2 + 0.5j, 2)
        value = gff_second_moment(*points)
        for shift in (3.0, -7j, 2.5 + 4j):
            with self.subTest(shift=shift):
                self.assertAlmostEqual(gff_second_moment(*(p + shift for p in points)), value, delta=1e-12)

    def test_covariance_diagonal(self):
        covariance = gff_covariance([(0, 1), (2j, 3 + 2j)])
        self.assertTrue(math.isnan(covariance[0, 0]))
        self.assertEqual(covariance[0, 1], covariance[1, 0])


class WickTests(SimpleTestCase):
    def test_pairings(self):
        self.assertEqual(len(list(pairings([0, 1, 2, 3]))), 3)
        self.assertEqual(len(list(pairings(list(range(6))))), 15)

    def test_all_ones(self):
        self.assertEqual(wick_moment(np.ones((4, 4))), 3.0)
        self.assertEqual(wick_moment(np.ones((6, 6))), 15.0)
        self.assertEqual(wick_moment(np.ones((3, 3))), 0.0)

    def test_fourth_moment(self):
        C = np.arange(16, dtype=float).reshape(4, 4)
        C = C + C.T
        self.assertEqual(wick_fourth_moment(C), C[0, 1] * C[2, 3] + C[0, 2] * C[1, 3] + C[0, 3] * C[1, 2])
        with self.assertRaises(MalformedSpec):
            wick_fourth_moment(np.ones((2, 2)))

    def test_estimate_window(self):
        estimate = MomentEstimate(mean=1.0, stderr=0.1, samples=10)
        self.assertTrue(estimate.within(1.25))
        self.assertFalse(estimate.within(1.5))
        self.assertTrue(MomentEstimate(0.0, math.inf, 1).within(5.0))


class EmpiricalMomentTests(SimpleTestCase):
    def setUp(self):
        self.g = hexagon(3, 3, 3)
        centre = self.g.face_centroid(self.g.bounded_faces[len(self.g.bounded_faces) // 2])
        self.faces = [nearest_face(self.g, (centre[0] + dx, centre[1])) for dx in (-2.0, -1.0, 1.0, 2.0)]

    def test_nearest_face_is_bounded(self):
        bounded = {f.index for f in self.g.bounded_faces}
        self.assertTrue(set(self.faces) <= bounded)

    def test_moment_estimate(self):
        estimate = empirical_moment(self.g, [(self.faces[0], self.faces[3])] * 2, 60, seed=3)
        self.assertEqual(estimate.samples, 60)
        self.assertGreaterEqual(estimate.mean, 0.0)
        self.assertTrue(math.isfinite(estimate.stderr))

    def test_needs_pairs(self):
        with self.assertRaises(MalformedSpec):
            empirical_moment(self.g, [], 5, seed=1)

    def test_wick_comparison_needs_four_pairs(self):
        batch = sample_batch(self.g, 30, seed=2)
        pair = (self.faces[0], self.faces[2])
        result = wick_comparison(batch, [pair] * 4)
        self.assertEqual(result.covariance.shape, (4, 4))
        self.assertEqual(result.fourth.samples, 30)
        with self.assertRaises(MalformedSpec):
            wick_comparison(batch, [pair] * 3)

    @tag("slow")
    def test_fourth_moment_is_gaussian(self):
        g = hexagon(8, 8, 8)
        batch = sample_batch(g, 2000, seed=5, threads=4)
        centre = g.face_centroid(g.bounded_faces[len(g.bounded_faces) // 2])
        faces = [nearest_face(g, (centre[0] + dx, centre[1] + dy)) for dx, dy in ((-3, 0), (3, 0), (0, -3), (0, 3))]
        pairs = [(faces[0], faces[1]), (faces[2], faces[3]), (faces[0], faces[2]), (faces[1], faces[3])]
        result = wick_comparison(batch, pairs)
        self.assertTrue(result.fourth.within(result.prediction, sigmas=4.0))


@tag("slow")
class TorusMomentTests(SimpleTestCase):
    """Heat-bath samples of the flat 60 x 60 honeycomb torus against the Gaussian free field."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cover = torus_cover(honeycomb_domain(), 60)
        steps = 80 * len(cls.cover.faces)
        cls.batch = sample_batch(cls.cover, 200, seed=17, method=METHOD_GLAUBER, steps=steps)
        middle = np.array(cls.cover.white_positions).mean(axis=0)
        cls.centre = _face_point(cls.cover, nearest_face(cls.cover, tuple(middle)))

    def increments(self, shift: complex = 0j):
        faces = []
        for dx in (-5.0, 5.0, -2.0, 2.0):
            point = self.centre + shift + dx
            faces.append(nearest_face(self.cover, (point.real, point.imag)))
        points = [_face_point(self.cover, face) for face in faces]
        return [(faces[0], faces[1]), (faces[2], faces[3])], gff_second_moment(*points)

    def test_second_moment_matches_the_free_field(self):
        pairs, prediction = self.increments()
        self.assertGreater(prediction, 0.05)
        estimate = empirical_moment(self.cover, pairs, self.batch)
        self.assertTrue(estimate.within(prediction), f"{estimate} vs {prediction}")

    def test_second_moment_is_translation_invariant(self):
        pairs, prediction = self.increments()
        shifted_pairs, shifted_prediction = self.increments(-4 * math.sqrt(3) * 1j)
        self.assertAlmostEqual(shifted_prediction, prediction, delta=1e-9)
        here = empirical_moment(self.cover, pairs, self.batch)
        there = empirical_moment(self.cover, shifted_pairs, self.batch)
        self.assertLess(abs(here.mean - there.mean), 3 * math.hypot(here.stderr, there.stderr))
        self.assertTrue(there.within(shifted_prediction))
