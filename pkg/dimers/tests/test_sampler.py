import math
from collections import Counter
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import stats

from dimers.exceptions import InfeasibleInput, MalformedSpec
from dimers.graphs import check_perfect, torus_cover
from dimers.heights import require_tileable, torus_periods
from dimers.kasteleyn import edge_probabilities, kasteleyn_matrix
from dimers.regions import corner_deleted_board, hexagon, honeycomb_domain, rectangle, three_by_one
from dimers.sampler import (
    METHOD_GLAUBER,
    StatsQuery,
    brick_cover,
    burn_in_steps,
    collect_stats,
    cover_log_probability,
    exact_sample,
    glauber_chain,
    label_frequency,
    sample_batch,
)


def _disc_shares(g, matchings, label, radius):
    """Per cover, the share of covered edges carrying ``label`` within ``radius`` of the region's centre."""
    whites = np.array(g.white_positions)
    blacks = np.array(g.black_positions)
    centre = np.vstack([whites, blacks]).mean(axis=0)
    middles = np.array([(whites[e.white] + blacks[e.black]) / 2 for e in g.edges])
    inside = np.hypot(*(middles - centre).T) <= radius
    labelled = inside & np.array([e.label == label for e in g.edges])
    shares = []
    for matching in matchings:
        present = np.zeros(len(g.edges), dtype=bool)
        present[list(matching)] = True
        shares.append((present & labelled).sum() / (present & inside).sum())
    return np.array(shares)


class ExactSamplerTests(SimpleTestCase):
    def test_sample_is_a_cover(self):
        g = hexagon(2, 3, 2)
        check_perfect(g, exact_sample(g, seed=3))

    def test_batches_are_reproducible(self):
        g = rectangle(4, 4)
        first = sample_batch(g, 20, seed=11)
        second = sample_batch(g, 20, seed=11)
        self.assertEqual(first.matchings, second.matchings)

    def test_threads_do_not_change_results(self):
        g = hexagon(2, 2, 2)
        self.assertEqual(
            sample_batch(g, 16, seed=5, threads=1).matchings,
            sample_batch(g, 16, seed=5, threads=4).matchings,
        )

    def test_log_probabilities(self):
        g = three_by_one(2, 3, 5)
        batch = sample_batch(g, 5, seed=2)
        for matching, log_p in zip(batch.matchings, batch.log_probabilities):
            self.assertAlmostEqual(log_p, cover_log_probability(g, matching), delta=1e-7)

    def test_uniform_on_the_small_hexagon(self):
        g = hexagon(2, 2, 2)
        batch = sample_batch(g, 2000, seed=7)
        counts = Counter(batch.matchings)
        self.assertEqual(len(counts), 20)
        self.assertGreater(stats.chisquare(list(counts.values())).pvalue, 1e-3)

    @tag("slow")
    def test_uniform_on_the_small_hexagon_with_many_samples(self):
        g = hexagon(2, 2, 2)
        batch = sample_batch(g, 100_000, seed=8, threads=4)
        counts = Counter(batch.matchings)
        self.assertEqual(len(counts), 20)
        self.assertGreater(stats.chisquare(list(counts.values())).pvalue, 0.01)

    def test_weighted_edge_frequency(self):
        g = three_by_one(2, 3, 5)
        left = next(k for k, e in enumerate(g.edges) if e.label == "v" and g.white_positions[e.white][0] == 0)
        batch = sample_batch(g, 4000, seed=1)
        expected = float(Fraction(2 + 30, 37))
        frequency = sum(left in m for m in batch.matchings) / len(batch.matchings)
        self.assertLess(abs(frequency - expected), 4 * math.sqrt(expected * (1 - expected) / 4000))

    def test_edge_marginals(self):
        g = rectangle(4, 4)
        report = collect_stats(sample_batch(g, 3000, seed=4))
        z = report.z_scores(edge_probabilities(kasteleyn_matrix(g)))
        self.assertLess(float(np.max(np.abs(z))), 4.5)

    @tag("slow")
    def test_edge_marginals_on_a_larger_region(self):
        g = rectangle(6, 5)
        report = collect_stats(sample_batch(g, 100_000, seed=4, threads=4))
        z = report.z_scores(edge_probabilities(kasteleyn_matrix(g)))
        self.assertLess(float(np.max(np.abs(z))), 4.0)

    def test_untileable_and_periodic_regions(self):
        with self.assertRaises(InfeasibleInput):
            sample_batch(corner_deleted_board(4), 1)
        with self.assertRaises(InfeasibleInput):
            exact_sample(rectangle(3, 3))
        with self.assertRaises(MalformedSpec):
            sample_batch(torus_cover(honeycomb_domain(), 3), 1)

    def test_bad_arguments(self):
        g = rectangle(2, 2)
        with self.assertRaises(MalformedSpec):
            sample_batch(g, -1)
        with self.assertRaises(MalformedSpec):
            sample_batch(g, 1, method="metropolis")


class GlauberTests(SimpleTestCase):
    def test_chain_keeps_a_cover(self):
        g = hexagon(2, 2, 2)
        start = require_tileable(g)
        check_perfect(g, glauber_chain(g, start, 500, seed=1))
        self.assertEqual(glauber_chain(g, start, 0, seed=1), start)

    def test_negative_steps(self):
        g = rectangle(2, 2)
        with self.assertRaises(MalformedSpec):
            glauber_chain(g, require_tileable(g), -1)

    def test_two_by_two_is_balanced(self):
        g = rectangle(2, 2)
        batch = sample_batch(g, 400, seed=3, method=METHOD_GLAUBER, steps=50)
        counts = Counter(batch.matchings)
        self.assertEqual(len(counts), 2)
        self.assertLess(abs(max(counts.values()) / 400 - 0.5), 0.125)
        self.assertTrue(all(math.isnan(p) for p in batch.log_probabilities))

    def test_torus_chain_stays_in_its_class(self):
        cover = torus_cover(honeycomb_domain(), 3)
        batch = sample_batch(cover, 5, seed=2, method=METHOD_GLAUBER, steps=300)
        for matching in batch.matchings:
            check_perfect(cover, matching)
            self.assertEqual(torus_periods(cover, matching), (1, 1))

    def test_brick_cover_needs_multiple_of_three(self):
        with self.assertRaises(MalformedSpec):
            brick_cover(torus_cover(honeycomb_domain(), 2))

    def test_burn_in(self):
        g = rectangle(3, 4)
        self.assertEqual(burn_in_steps(g, 2), 2 * len(g.faces))

    @tag("slow")
    def test_edge_marginals_after_burn_in(self):
        g = hexagon(4, 4, 4)
        batch = sample_batch(g, 600, seed=12, method=METHOD_GLAUBER, steps=burn_in_steps(g, 200))
        z = collect_stats(batch).z_scores(edge_probabilities(kasteleyn_matrix(g)))
        self.assertGreaterEqual(float(np.mean(np.abs(z) < 3.0)), 0.95)
        self.assertLess(float(np.max(np.abs(z))), 4.5)

    def test_disc_around_the_centre_has_a_third_of_each_label(self):
        g = hexagon(3, 3, 3)
        probabilities = np.array([float(p) for p in edge_probabilities(kasteleyn_matrix(g))])
        whites = np.array(g.white_positions)
        blacks = np.array(g.black_positions)
        middles = np.array([(whites[e.white] + blacks[e.black]) / 2 for e in g.edges])
        centre = np.vstack([whites, blacks]).mean(axis=0)
        inside = np.hypot(*(middles - centre).T) <= 2.0
        labelled = inside & np.array([e.label == "a" for e in g.edges])
        self.assertAlmostEqual(probabilities[labelled].sum() / probabilities[inside].sum(), 1 / 3, delta=1e-12)

    @tag("slow")
    def test_bulk_label_density_is_a_third(self):
        g = hexagon(6, 6, 6)
        batch = sample_batch(g, 300, seed=21, method=METHOD_GLAUBER, steps=burn_in_steps(g, 400))
        shares = _disc_shares(g, batch.matchings, "a", radius=3.0)
        stderr = shares.std(ddof=1) / math.sqrt(len(shares))
        self.assertLess(abs(shares.mean() - 1 / 3), 3 * stderr)


class StatsTests(SimpleTestCase):
    def test_frequencies_count_the_dimers(self):
        g = rectangle(4, 4)
        report = collect_stats(sample_batch(g, 50, seed=9))
        self.assertAlmostEqual(float(report.edge_frequency.sum()), g.n_white)
        self.assertEqual(report.samples, 50)

    def test_height_moments(self):
        g = hexagon(2, 2, 2)
        faces = tuple(f.index for f in g.bounded_faces[:3])
        report = collect_stats(sample_batch(g, 40, seed=1), StatsQuery(faces=faces, base_face=faces[0]))
        self.assertEqual(report.height_mean[faces[0]], 0.0)
        self.assertEqual(report.height_variance[faces[0]], 0.0)
        self.assertGreaterEqual(report.height_variance[faces[1]], 0.0)

    def test_density_grid(self):
        g = hexagon(2, 2, 2)
        report = collect_stats(sample_batch(g, 30, seed=1), StatsQuery(grid=4))
        self.assertEqual(set(report.density), {"a", "b", "c"})
        self.assertEqual(report.density["a"].shape, (4, 4))
        self.assertIsNotNone(report.extent)

    def test_label_shares_in_a_hexagon_are_fixed(self):
        g = hexagon(2, 2, 2)
        report = collect_stats(sample_batch(g, 10, seed=1))
        for label in "abc":
            self.assertAlmostEqual(label_frequency(g, report.edge_frequency, label), 1 / 3)

    def test_empty_batch(self):
        with self.assertRaises(MalformedSpec):
            collect_stats(sample_batch(rectangle(2, 2), 0))
