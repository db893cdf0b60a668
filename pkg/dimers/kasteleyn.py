"""Kasteleyn matrices, exact partition functions and local statistics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from sympy.polys.domains.gaussiandomains import GaussianElement
from sympy.polys.matrices import DomainMatrix

from . import exact
from .exceptions import InfeasibleInput, MalformedSpec
from .graphs import BipartiteGraph, KasteleynPhasing, kasteleyn_phasing, matching_weight

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KasteleynMatrix:
    """Rows are black vertices, columns white vertices; K(b, w) sums phase * weight."""

    graph: BipartiteGraph
    phasing: KasteleynPhasing
    rows: Mapping[int, Mapping[int, object]]
    twist: tuple[object, object] | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.graph.n_black, self.graph.n_white)

    def entry(self, black: int, white: int):
        return self.rows.get(black, {}).get(white, exact.ZERO)

    def edge_value(self, edge_index: int):
        """Phase times weight of one edge, twisted like the matrix."""
        edge = self.graph.edges[edge_index]
        value = self.phasing.unit(edge_index) * exact.gaussian(edge.weight)
        if self.twist is not None and edge.crossing != (0, 0):
            z, w = self.twist
            value = value * _power(z, edge.crossing[0]) * _power(w, edge.crossing[1])
        return value

    def domain_matrix(self) -> DomainMatrix:
        return exact.sparse_matrix(self.rows, self.shape)

    def to_numpy(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.complex128)
        for black, row in self.rows.items():
            for white, value in row.items():
                out[black, white] = exact.to_complex(value)
        return out


def kasteleyn_matrix(
    g: BipartiteGraph,
    phasing: KasteleynPhasing | None = None,
    twist: tuple[object, object] | None = None,
) -> KasteleynMatrix:
    """Assemble K; ``twist = (z, w)`` multiplies each edge by z**cx * w**cy for its crossing."""
    phasing = phasing or kasteleyn_phasing(g)
    if twist is not None:
        twist = tuple(x if isinstance(x, GaussianElement) else exact.gaussian(x) for x in twist)
    rows: dict[int, dict[int, object]] = {}
    for index, edge in enumerate(g.edges):
        value = phasing.unit(index) * exact.gaussian(edge.weight)
        if twist is not None and edge.crossing != (0, 0):
            z, w = twist
            value = value * _power(z, edge.crossing[0]) * _power(w, edge.crossing[1])
        row = rows.setdefault(edge.black, {})
        row[edge.white] = row.get(edge.white, exact.ZERO) + value
    logger.debug("Kasteleyn matrix %dx%d with %d edges", g.n_black, g.n_white, len(g.edges))
    return KasteleynMatrix(graph=g, phasing=phasing, rows=rows, twist=twist)


def _power(base, exponent: int):
    if exponent >= 0:
        return base**exponent
    return exact.ONE / base ** (-exponent)


def determinant(K: KasteleynMatrix):
    rows, cols = K.shape
    if rows != cols:
        return exact.ZERO
    return exact.determinant(K.domain_matrix())


def partition_function(g: BipartiteGraph, phasing: KasteleynPhasing | None = None) -> Fraction:
    """Z = |det K| for a finite planar graph; 0 when the colour classes differ in size."""
    if g.is_periodic:
        raise MalformedSpec("Periodic graphs are counted with torus.torus_partition.")
    if not g.is_balanced:
        return Fraction(0)
    if g.n_white == 0:
        return Fraction(1)
    return exact.modulus_if_axis(determinant(kasteleyn_matrix(g, phasing)))


def float_partition_function(g: BipartiteGraph, phasing: KasteleynPhasing | None = None) -> float:
    if not g.is_balanced:
        return 0.0
    return abs(exact.float_determinant(kasteleyn_matrix(g, phasing).domain_matrix()))


def rectangle_Z_product(m: int, n: int) -> float:
    """Product formula for the m x n grid: sqrt of prod |2cos(pi j/(m+1)) + 2i cos(pi k/(n+1))|."""
    if m < 1 or n < 1:
        raise MalformedSpec("Rectangle sides must be positive.")
    if m % 2 and n % 2:
        return 0.0
    j = np.arange(1, m + 1)[:, None]
    k = np.arange(1, n + 1)[None, :]
    factors = np.abs(2 * np.cos(np.pi * j / (m + 1)) + 2j * np.cos(np.pi * k / (n + 1)))
    if np.any(factors < 1e-12):
        return 0.0
    return float(np.exp(0.5 * np.sum(np.log(factors))))


def macmahon_count(a: int, b: int, c: int) -> int:
    """Lozenge tilings of the A x B x C hexagon, prod (i+j+k-1)/(i+j+k-2)."""
    if min(a, b, c) < 0:
        raise MalformedSpec("Hexagon sides must be non-negative.")
    total = Fraction(1)
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            for k in range(1, c + 1):
                total *= Fraction(i + j + k - 1, i + j + k - 2)
    return int(total)


def macmahon_q_count(a: int, b: int, c: int, q) -> Fraction:
    """Volume generating function prod (1 - q^(i+j+k-1)) / (1 - q^(i+j+k-2))."""
    q = exact.to_fraction(q)
    if q == 1:
        return Fraction(macmahon_count(a, b, c))
    total = Fraction(1)
    for i in range(1, a + 1):
        for j in range(1, b + 1):
            for k in range(1, c + 1):
                total *= (1 - q ** (i + j + k - 1)) / (1 - q ** (i + j + k - 2))
    return total


def strip_count(length: int, width: int) -> int:
    """Domino tilings of a width x length strip by the transfer recursion (width <= 3)."""
    if length < 0:
        raise MalformedSpec("Strip length must be non-negative.")
    if width == 1:
        return 1 if length % 2 == 0 else 0
    if width == 2:
        previous, current = 1, 1
        for _ in range(length - 1):
            previous, current = current, previous + current
        return current if length else 1
    if width == 3:
        if length % 2:
            return 0
        values = [1, 3]
        while len(values) <= length // 2:
            values.append(4 * values[-1] - values[-2])
        return values[length // 2]
    raise MalformedSpec("strip_count handles widths 1, 2 and 3.")


def cylinder_partition(m: int, n: int) -> int:
    """Domino tilings of the m x n cylinder (m columns around, n rows) by row transfer.

    A state is the set of cells in the next row already covered by vertical
    dominoes.  The wrapped pair (m - 1, 0) is a distinct domino even when m = 2.
    """
    if m < 1 or n < 0:
        raise MalformedSpec("Cylinder sides must be positive.")

    def fillings(mask: int, last: bool) -> Iterable[int]:
        def place(i: int, covered: int, below: int):
            if i == m:
                yield below
                return
            if covered >> i & 1:
                yield from place(i + 1, covered, below)
                return
            if not last:
                yield from place(i + 1, covered | 1 << i, below | 1 << i)
            if i + 1 < m and not covered >> (i + 1) & 1:
                yield from place(i + 2, covered | 3 << i, below)

        yield from place(0, mask, 0)
        wrap = 1 | 1 << (m - 1)
        if m >= 2 and not mask & wrap:
            yield from place(0, mask | wrap, 0)

    states = {0: 1}
    for row in range(n):
        following: dict[int, int] = {}
        for mask, count in states.items():
            for below in fillings(mask, row == n - 1):
                following[below] = following.get(below, 0) + count
        states = following
    return states.get(0, 0)


def inverse_entries(K: KasteleynMatrix, pairs: Iterable[tuple[int, int]]) -> dict[tuple[int, int], object]:
    """Exact K^{-1}(w, b) for the requested (white, black) pairs, one solve per black vertex."""
    rows, cols = K.shape
    if rows != cols:
        raise InfeasibleInput("no dimer cover")
    pairs = list(pairs)
    solutions = exact.solve_columns(K.domain_matrix(), (b for _, b in pairs))
    return {(w, b): solutions[b][w] for w, b in pairs}


def inverse_matrix(K: KasteleynMatrix) -> list[list[object]]:
    """Full exact K^{-1}, indexed [white][black]."""
    rows, cols = K.shape
    if rows != cols:
        raise InfeasibleInput("no dimer cover")
    solutions = exact.solve_columns(K.domain_matrix(), range(rows))
    return [[solutions[b][w] for b in range(rows)] for w in range(cols)]


def _check_disjoint(g: BipartiteGraph, edges: Sequence[int]) -> None:
    whites, blacks = set(), set()
    for edge_index in edges:
        if not 0 <= edge_index < len(g.edges):
            raise MalformedSpec(f"Unknown edge {edge_index}.")
        edge = g.edges[edge_index]
        if edge.white in whites or edge.black in blacks:
            raise MalformedSpec("The queried edges must be pairwise vertex-disjoint.")
        whites.add(edge.white)
        blacks.add(edge.black)


def edges_probability(
    K: KasteleynMatrix,
    edges: Sequence[int],
    inverse: Mapping[tuple[int, int], object] | None = None,
) -> Fraction:
    """Probability that all ``edges`` occur: prod K(e_i) * det[K^{-1}(w_i, b_j)]."""
    g = K.graph
    edges = list(edges)
    _check_disjoint(g, edges)
    if not edges:
        return Fraction(1)
    pairs = [(g.edges[ei].white, g.edges[ej].black) for ei in edges for ej in edges]
    if inverse is None or any(p not in inverse for p in pairs):
        inverse = inverse_entries(K, pairs)
    minor = [[inverse[(g.edges[ei].white, g.edges[ej].black)] for ej in edges] for ei in edges]
    value = exact.determinant(exact.dense_matrix(minor))
    for edge_index in edges:
        value = value * K.edge_value(edge_index)
    return exact.real_part(value, what="probability")


def edge_probabilities(K: KasteleynMatrix) -> list[Fraction]:
    """Single-edge probabilities K(e) K^{-1}(w, b) for every edge."""
    inverse = inverse_matrix(K)
    g = K.graph
    return [
        exact.real_part(K.edge_value(i) * inverse[edge.white][edge.black], what="probability")
        for i, edge in enumerate(g.edges)
    ]


def float_inverse(K: KasteleynMatrix) -> np.ndarray:
    """Floating point K^{-1}, indexed [white, black]."""
    rows, cols = K.shape
    if rows != cols:
        raise InfeasibleInput("no dimer cover")
    try:
        inverse = np.linalg.inv(K.to_numpy())
    except np.linalg.LinAlgError as exc:
        raise InfeasibleInput("no dimer cover") from exc
    if not np.all(np.isfinite(inverse)):
        raise InfeasibleInput("no dimer cover")
    return inverse


def float_edges_probability(K: KasteleynMatrix, edges: Sequence[int], inverse: np.ndarray | None = None) -> float:
    """edges_probability in floating point, for regions too large for exact elimination."""
    g = K.graph
    edges = list(edges)
    _check_disjoint(g, edges)
    if not edges:
        return 1.0
    inverse = float_inverse(K) if inverse is None else inverse
    whites = [g.edges[e].white for e in edges]
    blacks = [g.edges[e].black for e in edges]
    values = np.array([exact.to_complex(K.edge_value(e)) for e in edges])
    return float((np.prod(values) * np.linalg.det(inverse[np.ix_(whites, blacks)])).real)


def float_edge_probabilities(K: KasteleynMatrix, inverse: np.ndarray | None = None) -> np.ndarray:
    inverse = float_inverse(K) if inverse is None else inverse
    g = K.graph
    values = np.array([exact.to_complex(K.edge_value(i)) for i in range(len(g.edges))])
    whites = np.array([edge.white for edge in g.edges], dtype=int)
    blacks = np.array([edge.black for edge in g.edges], dtype=int)
    return (values * inverse[whites, blacks]).real


def weighted_cover_probability(g: BipartiteGraph, matching: Iterable[int]) -> Fraction:
    z = partition_function(g)
    if z == 0:
        raise InfeasibleInput("no dimer cover")
    return matching_weight(g, matching) / z


def log_partition_per_site(g: BipartiteGraph) -> float:
    z = partition_function(g)
    if z == 0:
        return -math.inf
    return math.log(z) / g.n_vertices


__all__ = [
    "KasteleynMatrix",
    "determinant",
    "edge_probabilities",
    "edges_probability",
    "float_edge_probabilities",
    "float_edges_probability",
    "float_inverse",
    "float_partition_function",
    "inverse_entries",
    "inverse_matrix",
    "kasteleyn_matrix",
    "log_partition_per_site",
    "macmahon_count",
    "macmahon_q_count",
    "partition_function",
    "cylinder_partition",
    "rectangle_Z_product",
    "strip_count",
    "weighted_cover_probability",
]
