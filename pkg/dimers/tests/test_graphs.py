from fractions import Fraction

from django.test import SimpleTestCase

from dimers.exceptions import MalformedSpec
from dimers.graphs import (
    BLACK,
    WHITE,
    BipartiteGraph,
    Edge,
    check_perfect,
    cycle_sign,
    enclosed_vertices,
    euler_characteristic,
    expected_cycle_sign,
    gauge_equivalent,
    gauge_transform,
    is_connected,
    kasteleyn_phasing,
    matching_weight,
    torus_cover,
    verify_phasing,
)
from dimers.regions import (
    build_region,
    corner_deleted_board,
    glued_hexagons,
    hexagon,
    honeycomb_domain,
    rectangle,
    region_from_json,
    region_to_json,
    square_3x2_domain,
    square_domain,
    square_pair_domain,
)


class RegionBuilderTests(SimpleTestCase):
    def test_rectangle_sizes(self):
        g = rectangle(4, 3)
        self.assertEqual((g.n_white, g.n_black), (6, 6))
        self.assertEqual(len(g.edges), 3 * 3 + 4 * 2)
        self.assertEqual(len(g.bounded_faces), 3 * 2)

    def test_corner_deleted_board_is_unbalanced(self):
        g = corner_deleted_board(8)
        self.assertEqual((g.n_white, g.n_black), (30, 32))
        self.assertFalse(g.is_balanced)

    def test_hexagon_balance(self):
        g = hexagon(2, 3, 4)
        self.assertEqual(g.n_white, 2 * 3 + 3 * 4 + 4 * 2)
        self.assertTrue(g.is_balanced)
        self.assertTrue(is_connected(g))

    def test_glued_hexagons(self):
        g = glued_hexagons(1, 2)
        self.assertTrue(g.is_balanced)
        self.assertEqual(g.n_white, 3 + 12)

    def test_planar_euler_characteristic(self):
        for g in (rectangle(3, 4), hexagon(2, 2, 2)):
            with self.subTest(g=g.name):
                self.assertEqual(euler_characteristic(g), 2)

    def test_torus_euler_characteristic(self):
        for g in (honeycomb_domain(), square_pair_domain(), square_domain(2), torus_cover(honeycomb_domain(), 3)):
            with self.subTest(g=g.name):
                self.assertEqual(euler_characteristic(g), 0)

    def test_unknown_weight_label(self):
        with self.assertRaises(MalformedSpec):
            rectangle(2, 2, weights={"a": 2})

    def test_non_positive_weight(self):
        with self.assertRaises(MalformedSpec):
            rectangle(2, 2, weights={"h": 0})

    def test_crossing_edges_need_periods(self):
        with self.assertRaises(MalformedSpec):
            BipartiteGraph(((0.0, 0.0),), ((1.0, 0.0),), (Edge(0, 0, Fraction(1), "", (1, 0)),))

    def test_square_3x2_domain(self):
        g = square_3x2_domain()
        self.assertEqual((g.n_white, g.n_black, len(g.edges)), (3, 3, 12))
        self.assertTrue(g.is_periodic)


class RegionDocumentTests(SimpleTestCase):
    def test_rectangle_document(self):
        g = region_from_json({"version": 1, "lattice": "square", "rectangle": [4, 4], "remove": [[0, 0], [3, 3]]})
        self.assertEqual(g.n_white + g.n_black, 14)

    def test_lattice_aliases(self):
        g = region_from_json({"version": 1, "lattice": "lozenge", "hexagon": [1, 1, 1]})
        self.assertEqual(g.lattice, "honeycomb")

    def test_torus_document_returns_fundamental_domain(self):
        g = region_from_json({"version": 1, "lattice": "honeycomb", "torus": {"ell": 1}, "weights": {"b": "1/2"}})
        self.assertEqual(g.name, "honeycomb-1")
        self.assertEqual({e.label: e.weight for e in g.edges}["b"], Fraction(1, 2))

    def test_explicit_graph_round_trip(self):
        for g in (hexagon(1, 2, 1, weights={"a": "3/2"}), square_domain(2)):
            with self.subTest(g=g.name):
                again = region_from_json(region_to_json(g))
                self.assertEqual(again.edges, g.edges)
                self.assertEqual(again.periods, g.periods)

    def test_build_region_accepts_documents_and_graphs(self):
        g = build_region({"version": 1, "lattice": "square", "rectangle": [2, 2]})
        self.assertEqual((g.n_white, g.n_black, len(g.edges)), (2, 2, 4))
        self.assertIs(build_region(g), g)
        with self.assertRaises(MalformedSpec):
            build_region("/nonexistent/region.json")

    def test_bad_documents(self):
        for doc in (
            [],
            {"lattice": "square", "rectangle": [2, 2]},
            {"version": 1, "lattice": "penrose", "rectangle": [2, 2]},
            {"version": 1, "lattice": "square"},
            {"version": 1, "lattice": "custom"},
            {"version": 1, "lattice": "custom", "white": [[0, 0]], "black": [[1, 0]], "edges": [{"black": 0}]},
        ):
            with self.subTest(doc=doc):
                with self.assertRaises(MalformedSpec):
                    region_from_json(doc)


class MatchingTests(SimpleTestCase):
    def test_check_perfect(self):
        g = rectangle(2, 1)
        self.assertEqual(check_perfect(g, [0]), frozenset({0}))
        with self.assertRaises(MalformedSpec):
            check_perfect(g, [])
        with self.assertRaises(MalformedSpec):
            check_perfect(g, [5])

    def test_matching_weight(self):
        g = rectangle(2, 2, weights={"h": 3, "v": Fraction(1, 2)})
        horizontal = [k for k, e in enumerate(g.edges) if e.label == "h"]
        self.assertEqual(matching_weight(g, horizontal), 9)


class PhasingTests(SimpleTestCase):
    def test_lattice_phasings_verify(self):
        for g in (rectangle(5, 4), hexagon(2, 3, 2), glued_hexagons(1, 2)):
            with self.subTest(g=g.name):
                self.assertTrue(verify_phasing(g, kasteleyn_phasing(g)))

    def test_region_with_hole(self):
        g = rectangle(5, 5, remove=[(2, 2)])
        self.assertTrue(verify_phasing(g, kasteleyn_phasing(g)))

    def test_periodic_phasings_verify(self):
        for g in (honeycomb_domain(), square_pair_domain(), square_domain(2), square_3x2_domain()):
            with self.subTest(g=g.name):
                self.assertTrue(verify_phasing(g, kasteleyn_phasing(g)))

    def test_boundary_cycle_of_three_by_three(self):
        g = rectangle(3, 3)
        # whites (0,0) (0,2) (1,1) (2,0) (2,2); blacks (0,1) (1,0) (1,2) (2,1)
        cycle = [(WHITE, 0), (BLACK, 1), (WHITE, 3), (BLACK, 3), (WHITE, 4), (BLACK, 2), (WHITE, 1), (BLACK, 0)]
        self.assertEqual(enclosed_vertices(g, cycle), 1)
        self.assertEqual(cycle_sign(g, kasteleyn_phasing(g), cycle), expected_cycle_sign(8, 1))
        self.assertEqual(expected_cycle_sign(8, 1), 1)

    def test_six_cycle(self):
        g = rectangle(2, 3)
        cycle = [(WHITE, 0), (BLACK, 1), (WHITE, 2), (BLACK, 2), (WHITE, 1), (BLACK, 0)]
        self.assertEqual(enclosed_vertices(g, cycle), 0)
        self.assertEqual(cycle_sign(g, kasteleyn_phasing(g), cycle), 1)

    def test_square_face_sign(self):
        self.assertEqual(expected_cycle_sign(4, 0), -1)
        self.assertEqual(expected_cycle_sign(6, 0), 1)

    def test_cycle_must_alternate(self):
        g = rectangle(2, 2)
        with self.assertRaises(MalformedSpec):
            cycle_sign(g, kasteleyn_phasing(g), [(WHITE, 0), (WHITE, 1), (BLACK, 0), (BLACK, 1)])


class GaugeTests(SimpleTestCase):
    def test_gauge_transform_is_equivalent(self):
        g = rectangle(3, 4)
        scaled = gauge_transform(g, {1: 2}, {0: Fraction(1, 3)})
        self.assertTrue(gauge_equivalent(g, [e.weight for e in g.edges], [e.weight for e in scaled.edges]))

    def test_changed_face_weight_is_not_equivalent(self):
        g = rectangle(2, 2)
        weights = [e.weight for e in g.edges]
        changed = list(weights)
        changed[0] = Fraction(2)
        self.assertFalse(gauge_equivalent(g, weights, changed))

    def test_non_positive_scaling(self):
        with self.assertRaises(MalformedSpec):
            gauge_transform(rectangle(2, 2), {0: 0})


class TorusCoverTests(SimpleTestCase):
    def test_cover_sizes(self):
        cover = torus_cover(honeycomb_domain(), 3)
        self.assertEqual((cover.n_white, cover.n_black, len(cover.edges)), (9, 9, 27))
        self.assertEqual(cover.meta["n"], 3)
        self.assertEqual(cover.name, "honeycomb-1x3")

    def test_planar_regions_have_no_cover(self):
        with self.assertRaises(MalformedSpec):
            torus_cover(rectangle(2, 2), 2)
