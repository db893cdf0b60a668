"""Flows, height functions, tileability and face flips."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import networkx as nx

from .constants import lattice_by_key
from .exceptions import FlipUnavailable, InfeasibleInput, MalformedSpec
from .graphs import WHITE, BipartiteGraph, Face, Matching, Node, check_perfect

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Flow:
    """Value on every edge oriented white -> black; reversing an edge negates it."""

    graph: BipartiteGraph
    values: tuple[Fraction, ...]

    def along(self, edge_index: int, white_to_black: bool = True) -> Fraction:
        value = self.values[edge_index]
        return value if white_to_black else -value

    def divergence(self, node: Node) -> Fraction:
        total = sum((self.values[e] for e in self.graph.incident_edges(node)), Fraction(0))
        return total if node[0] == WHITE else -total

    def __sub__(self, other: "Flow") -> "Flow":
        return Flow(self.graph, tuple(a - b for a, b in zip(self.values, other.values)))


def matching_flow(g: BipartiteGraph, matching: Iterable[int]) -> Flow:
    chosen = check_perfect(g, matching)
    return Flow(g, tuple(Fraction(1) if e in chosen else Fraction(0) for e in range(len(g.edges))))


def uniform_flow(g: BipartiteGraph, value: Fraction) -> Flow:
    return Flow(g, tuple(Fraction(value) for _ in g.edges))


def lattice_base_flow(g: BipartiteGraph) -> tuple[Flow, int]:
    """The symmetric base flow of the lattice and the integer scale of its heights."""
    family = lattice_by_key(g.lattice)
    if family is None or family.key == "custom":
        raise MalformedSpec("Custom graphs have no lattice base flow; pass a reference matching.")
    return uniform_flow(g, Fraction(1, family.height_scale)), family.height_scale


@dataclass(frozen=True)
class HeightFunction:
    graph: BipartiteGraph
    values: Mapping[int, Fraction]
    base_face: int
    scale: int
    base: str

    def __getitem__(self, face_index: int) -> Fraction:
        return self.values[face_index]

    def scaled(self, face_index: int) -> int | Fraction:
        value = self.values[face_index] * self.scale
        return int(value) if value.denominator == 1 else value

    def __sub__(self, other: "HeightFunction") -> dict[int, Fraction]:
        return {f: self.values[f] - other.values[f] for f in self.values if f in other.values}


def _height_faces(g: BipartiteGraph, cut_seams: bool) -> list[Face]:
    if g.is_periodic:
        return list(g.faces)
    return list(g.bounded_faces)


def _crossing(g: BipartiteGraph, edge_index: int, forward: bool, cut_seams: bool) -> bool:
    if not g.is_periodic or not cut_seams:
        return True
    return g.edges[edge_index].crossing == (0, 0)


def height_function(
    g: BipartiteGraph,
    matching: Iterable[int],
    base: Flow | Iterable[int] | None = None,
    f0: int | None = None,
    *,
    cut_seams: bool = False,
) -> HeightFunction:
    """Integrate the flow difference over the dual graph of bounded faces.

    ``base`` is a Flow, a reference matching, or None for the lattice flow
    (1/4 per edge on the square grid, 1/3 on the honeycomb).  The outer face
    carries no height.  On a torus the seams must be cut (``cut_seams=True``)
    unless the flow difference has zero periods.
    """
    flow = matching_flow(g, matching)
    if base is None:
        base_flow, scale = lattice_base_flow(g)
        base_name = f"lattice/{scale}"
    elif isinstance(base, Flow):
        base_flow, scale, base_name = base, 1, "flow"
    else:
        base_flow, scale, base_name = matching_flow(g, base), 1, "matching"
    difference = flow - base_flow
    if g.is_periodic and not cut_seams:
        periods = flux_periods(difference)
        if periods != (0, 0):
            raise MalformedSpec(
                f"Height is multivalued on this torus (periods {periods[0]}, {periods[1]}); "
                "pass cut_seams=True or use torus_periods."
            )
    faces = _height_faces(g, cut_seams)
    if not faces:
        return HeightFunction(g, {}, -1, scale, base_name)
    allowed = {face.index for face in faces}
    start = faces[0].index if f0 is None else f0
    if start not in allowed:
        raise MalformedSpec(f"Face {start} carries no height (outer face or unknown).")
    values: dict[int, Fraction] = {start: Fraction(0)}
    queue = deque([start])
    all_faces = g.faces
    worst = Fraction(0)
    while queue:
        current = queue.popleft()
        for edge_index, forward in all_faces[current].darts:
            if not _crossing(g, edge_index, forward, cut_seams):
                continue
            neighbour = g.dart_faces[(edge_index, not forward)]
            if neighbour not in allowed or neighbour == current:
                continue
            step = difference.along(edge_index, True)
            candidate = values[current] - step if forward else values[current] + step
            if neighbour in values:
                worst = max(worst, abs(values[neighbour] - candidate))
                continue
            values[neighbour] = candidate
            queue.append(neighbour)
    if worst:
        raise MalformedSpec(
            f"Height is not single-valued on {g.name or 'this graph'} (mismatch {worst * scale}); "
            "the region has holes with non-zero flux."
        )
    return HeightFunction(g, values, start, scale, base_name)


def flux_periods(flow: Flow) -> tuple[Fraction, Fraction]:
    """Net flow through the two seams of a periodic graph."""
    g = flow.graph
    px = sum((flow.values[i] * e.crossing[0] for i, e in enumerate(g.edges)), Fraction(0))
    py = sum((flow.values[i] * e.crossing[1] for i, e in enumerate(g.edges)), Fraction(0))
    return (px, py)


def torus_periods(
    g: BipartiteGraph, matching: Iterable[int], reference: Iterable[int] | None = None
) -> tuple[int, int]:
    """Seam winding of the cover, relative to ``reference`` when one is given."""
    if not g.is_periodic:
        raise MalformedSpec("Periods are defined for torus graphs only.")
    flow = matching_flow(g, matching)
    if reference is not None:
        flow = flow - matching_flow(g, reference)
    px, py = flux_periods(flow)
    return (int(px), int(py))


@dataclass(frozen=True)
class TorusCoverSummary:
    matching: Matching
    label_counts: Mapping[str, int]
    periods: tuple[int, int]


def summarize_torus_cover(g: BipartiteGraph, matching: Iterable[int]) -> TorusCoverSummary:
    chosen = check_perfect(g, matching)
    counts: dict[str, int] = {}
    for edge_index in chosen:
        label = g.edges[edge_index].label
        counts[label] = counts.get(label, 0) + 1
    return TorusCoverSummary(chosen, counts, torus_periods(g, chosen))


def maximum_matching(g: BipartiteGraph) -> tuple[Matching, int]:
    graph = g.to_networkx()
    whites = [(WHITE, i) for i in range(g.n_white)]
    pairs = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=whites)
    chosen = []
    for node in whites:
        partner = pairs.get(node)
        if partner is not None:
            chosen.append(graph.edges[node, partner]["index"])
    return frozenset(chosen), len(chosen)


def tileable(g: BipartiteGraph) -> tuple[bool, Matching | None]:
    if not g.is_balanced:
        return False, None
    if g.n_white == 0:
        return True, frozenset()
    matching, size = maximum_matching(g)
    if size == g.n_white:
        return True, matching
    return False, None


def _face_split(g: BipartiteGraph, chosen: Matching, face: Face) -> tuple[list[int], list[int]] | None:
    edges = face.edges
    if len(set(edges)) != len(edges) or len(edges) % 2:
        return None
    even, odd = edges[0::2], edges[1::2]
    if all(e in chosen for e in even) and not any(e in chosen for e in odd):
        return list(even), list(odd)
    if all(e in chosen for e in odd) and not any(e in chosen for e in even):
        return list(odd), list(even)
    return None


def face_flip(g: BipartiteGraph, matching: Iterable[int], face: int | Face) -> Matching:
    chosen = frozenset(matching)
    face = g.faces[face] if isinstance(face, int) else face
    split = _face_split(g, chosen, face)
    if split is None or (face.outer and not g.is_periodic):
        raise FlipUnavailable(f"flip unavailable at face {face.index}")
    matched, unmatched = split
    return (chosen - frozenset(matched)) | frozenset(unmatched)


def flippable_faces(g: BipartiteGraph, matching: Iterable[int]) -> list[int]:
    chosen = frozenset(matching)
    candidates = g.faces if g.is_periodic else g.bounded_faces
    return [face.index for face in candidates if _face_split(g, chosen, face) is not None]


def require_tileable(g: BipartiteGraph) -> Matching:
    ok, witness = tileable(g)
    if not ok:
        raise InfeasibleInput("untileable")
    return witness


__all__ = [
    "Flow",
    "HeightFunction",
    "TorusCoverSummary",
    "face_flip",
    "flippable_faces",
    "flux_periods",
    "height_function",
    "lattice_base_flow",
    "matching_flow",
    "maximum_matching",
    "require_tileable",
    "summarize_torus_cover",
    "tileable",
    "torus_periods",
    "uniform_flow",
]
