"""Brute-force dimer cover enumeration.

Backtracking always extends the matching at the lowest-index uncovered white
vertex.  Used as the reference for every exact count in the test-suite.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from sympy.combinatorics import Permutation

from .exceptions import MalformedSpec
from .graphs import BipartiteGraph, KasteleynPhasing, Matching, kasteleyn_phasing, matching_weight, torus_cover

logger = logging.getLogger(__name__)


def enumerate_matchings(g: BipartiteGraph, limit: int | None = None) -> Iterator[Matching]:
    if not g.is_balanced:
        return
    by_white: list[list[int]] = [[] for _ in range(g.n_white)]
    for index, edge in enumerate(g.edges):
        by_white[edge.white].append(index)
    used_black = [False] * g.n_black
    chosen: list[int] = []
    produced = 0

    def extend(white: int) -> Iterator[Matching]:
        nonlocal produced
        if white == g.n_white:
            produced += 1
            yield frozenset(chosen)
            return
        for edge_index in by_white[white]:
            black = g.edges[edge_index].black
            if used_black[black]:
                continue
            used_black[black] = True
            chosen.append(edge_index)
            yield from extend(white + 1)
            chosen.pop()
            used_black[black] = False
            if limit is not None and produced >= limit:
                return

    yield from extend(0)


def brute_force_count(g: BipartiteGraph) -> Fraction:
    return sum((matching_weight(g, m) for m in enumerate_matchings(g)), Fraction(0))


def brute_force_edge_weights(g: BipartiteGraph) -> tuple[Fraction, list[Fraction]]:
    """Weighted cover total and, per edge, the weighted total of covers using it."""
    total = Fraction(0)
    per_edge = [Fraction(0)] * len(g.edges)
    for matching in enumerate_matchings(g):
        weight = matching_weight(g, matching)
        total += weight
        for edge_index in matching:
            per_edge[edge_index] += weight
    return total, per_edge


def brute_force_probabilities(g: BipartiteGraph) -> list[Fraction]:
    total, per_edge = brute_force_edge_weights(g)
    if total == 0:
        raise MalformedSpec("The graph has no dimer cover.")
    return [value / total for value in per_edge]


@dataclass(frozen=True)
class TorusTerm:
    """One cover of a torus graph with its determinant sign and seam winding."""

    matching: Matching
    weight: Fraction
    sign: int
    winding: tuple[int, int]


def torus_terms(cover: BipartiteGraph, phasing: KasteleynPhasing | None = None) -> list[TorusTerm]:
    if not cover.is_periodic:
        raise MalformedSpec("torus_terms needs a periodic graph.")
    phasing = phasing or kasteleyn_phasing(cover)
    if not phasing.is_real:
        raise MalformedSpec("Torus expansions are taken with real Kasteleyn signs.")
    terms = []
    for matching in enumerate_matchings(cover):
        image = [0] * cover.n_white
        sign = 1
        wx = wy = 0
        for edge_index in matching:
            edge = cover.edges[edge_index]
            image[edge.white] = edge.black
            if phasing.exponents[edge_index] % 4 == 2:
                sign = -sign
            wx += edge.crossing[0]
            wy += edge.crossing[1]
        sign *= Permutation(image).signature()
        terms.append(TorusTerm(matching, matching_weight(cover, matching), sign, (wx, wy)))
    logger.debug("Enumerated %d torus covers of %s", len(terms), cover.name)
    return terms


def torus_brute_force(domain: BipartiteGraph, n: int) -> dict[tuple[int, int], tuple[int, Fraction]]:
    """Covers of the n x n torus grouped by seam winding: winding -> (count, total weight)."""
    groups: dict[tuple[int, int], list] = defaultdict(lambda: [0, Fraction(0)])
    for term in torus_terms(torus_cover(domain, n)):
        group = groups[term.winding]
        group[0] += 1
        group[1] += term.weight
    return {key: (count, weight) for key, (count, weight) in sorted(groups.items())}


def torus_brute_force_total(domain: BipartiteGraph, n: int) -> Fraction:
    return sum((weight for _, weight in torus_brute_force(domain, n).values()), Fraction(0))


def class_sign_table(domain: BipartiteGraph, n: int) -> dict[tuple[int, int], int]:
    """Determinant sign of each winding class mod 2, checked to be constant within the class."""
    table: dict[tuple[int, int], int] = {}
    for term in torus_terms(torus_cover(domain, n)):
        key = (term.winding[0] % 2, term.winding[1] % 2)
        previous = table.setdefault(key, term.sign)
        if previous != term.sign:
            raise MalformedSpec(
                f"Covers in winding class {key} carry both signs; the domain signing is not Kasteleyn."
            )
    return table


def signed_polynomial_terms(domain: BipartiteGraph) -> dict[tuple[int, int], Fraction]:
    """sum over covers of the fundamental domain of sign * weight * z^wx w^wy, by monomial."""
    totals: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for term in torus_terms(domain):
        totals[term.winding] += term.sign * term.weight
    return {key: value for key, value in totals.items() if value}


__all__ = [
    "TorusTerm",
    "brute_force_count",
    "brute_force_edge_weights",
    "brute_force_probabilities",
    "class_sign_table",
    "enumerate_matchings",
    "signed_polynomial_terms",
    "torus_brute_force",
    "torus_brute_force_total",
    "torus_terms",
]
