from django.test import SimpleTestCase

from dimers.exceptions import FlipUnavailable, InfeasibleInput, MalformedSpec
from dimers.graphs import BLACK, WHITE, torus_cover
from dimers.heights import (
    face_flip,
    flippable_faces,
    height_function,
    matching_flow,
    maximum_matching,
    require_tileable,
    tileable,
    torus_periods,
)
from dimers.oracle import enumerate_matchings
from dimers.regions import corner_deleted_board, hexagon, honeycomb_domain, rectangle
from dimers.sampler import brick_cover


class TileabilityTests(SimpleTestCase):
    def test_corner_deleted_board(self):
        g = corner_deleted_board(8)
        ok, witness = tileable(g)
        self.assertFalse(ok)
        self.assertIsNone(witness)
        self.assertEqual(maximum_matching(g)[1], 30)

    def test_witness_is_a_cover(self):
        g = hexagon(3, 2, 2)
        ok, witness = tileable(g)
        self.assertTrue(ok)
        self.assertEqual(len(witness), g.n_white)
        self.assertEqual({g.edges[e].white for e in witness}, set(range(g.n_white)))
        self.assertEqual({g.edges[e].black for e in witness}, set(range(g.n_black)))

    def test_require_tileable(self):
        with self.assertRaisesMessage(InfeasibleInput, "untileable"):
            require_tileable(rectangle(3, 3))


class HeightFunctionTests(SimpleTestCase):
    def test_matching_flow_has_unit_divergence(self):
        g = rectangle(2, 4)
        flow = matching_flow(g, require_tileable(g))
        self.assertEqual(sum(flow.values), g.n_white)
        self.assertEqual(flow.divergence((WHITE, 0)), 1)
        self.assertEqual(flow.divergence((BLACK, 0)), -1)

    def test_scaled_heights_are_integers(self):
        for g in (hexagon(2, 2, 2), rectangle(4, 4)):
            with self.subTest(g=g.name):
                cover = require_tileable(g)
                heights = height_function(g, cover)
                for face in heights.values:
                    self.assertIsInstance(heights.scaled(face), int)

    def test_base_face_is_zero(self):
        g = rectangle(4, 4)
        cover = require_tileable(g)
        face = g.bounded_faces[3].index
        self.assertEqual(height_function(g, cover, f0=face)[face], 0)

    def test_outer_face_carries_no_height(self):
        g = rectangle(2, 2)
        with self.assertRaises(MalformedSpec):
            height_function(g, require_tileable(g), f0=g.outer_face.index)

    def test_reference_matching_difference(self):
        g = rectangle(2, 2)
        first, second = sorted(enumerate_matchings(g), key=sorted)
        heights = height_function(g, first, base=first)
        self.assertTrue(all(v == 0 for v in heights.values.values()))
        self.assertEqual(len(height_function(g, second, base=first).values), 1)


class FaceFlipTests(SimpleTestCase):
    def test_flip_changes_one_face_by_one(self):
        g = rectangle(4, 4)
        cover = require_tileable(g)
        faces = flippable_faces(g, cover)
        self.assertTrue(faces)
        face = faces[0]
        anchor = next(f.index for f in g.bounded_faces if f.index != face)
        before = height_function(g, cover, f0=anchor)
        after = height_function(g, face_flip(g, cover, face), f0=anchor)
        for index, value in before.values.items():
            change = after[index] - value
            if index == face:
                self.assertEqual(abs(change), 1)
            else:
                self.assertEqual(change, 0)

    def test_flip_twice_is_identity(self):
        g = hexagon(2, 2, 2)
        cover = require_tileable(g)
        face = flippable_faces(g, cover)[0]
        self.assertEqual(face_flip(g, face_flip(g, cover, face), face), cover)

    def test_non_alternating_face(self):
        g = rectangle(4, 4)
        cover = require_tileable(g)
        blocked = [f.index for f in g.bounded_faces if f.index not in flippable_faces(g, cover)]
        self.assertTrue(blocked)
        with self.assertRaises(FlipUnavailable):
            face_flip(g, cover, blocked[0])

    def test_flip_unavailable_is_infeasible(self):
        self.assertTrue(issubclass(FlipUnavailable, InfeasibleInput))


class TorusHeightTests(SimpleTestCase):
    def test_seam_windings(self):
        cover = torus_cover(honeycomb_domain(), 3)
        brick = brick_cover(cover)
        straight = frozenset(k for k, e in enumerate(cover.edges) if e.label == "a")
        self.assertEqual(torus_periods(cover, straight), (0, 0))
        self.assertEqual(torus_periods(cover, brick), (1, 1))
        self.assertEqual(torus_periods(cover, brick, reference=brick), (0, 0))

    def test_seams_must_be_cut_for_winding_covers(self):
        cover = torus_cover(honeycomb_domain(), 2)
        matching = frozenset(k for k, e in enumerate(cover.edges) if e.label == "a")
        with self.assertRaises(MalformedSpec):
            height_function(cover, matching)
        heights = height_function(cover, matching, cut_seams=True)
        self.assertTrue(heights.values)
