"""Embedded bipartite graphs, their faces and Kasteleyn phasings.

Vertices are addressed as ``(color, index)`` with color ``WHITE`` or ``BLACK``.
Every edge joins one white to one black vertex.  The planar embedding is the
rotation system obtained by sorting incident edges by polar angle; on a torus
the black endpoint is lifted by ``crossing[0] * periods[0] + crossing[1] * periods[1]``.

Faces are traced counter-clockwise.  Phasings are stored as exponents ``e`` of
``i**e`` so that Kasteleyn entries stay inside Q(i).
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np
from matplotlib.path import Path as PolygonPath

from . import exact
from .exceptions import MalformedSpec

logger = logging.getLogger(__name__)

WHITE = 0
BLACK = 1

Node = tuple[int, int]
Point = tuple[float, float]
Matching = frozenset[int]


@dataclass(frozen=True)
class Edge:
    white: int
    black: int
    weight: Fraction = Fraction(1)
    label: str = ""
    crossing: tuple[int, int] = (0, 0)
    phase: int | None = None


@dataclass(frozen=True)
class Face:
    index: int
    darts: tuple[tuple[int, bool], ...]  # (edge, traversed white -> black)
    nodes: tuple[Node, ...]
    area: float
    outer: bool = False

    @property
    def length(self) -> int:
        return len(self.darts)

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(edge for edge, _ in self.darts)


@dataclass(frozen=True)
class BipartiteGraph:
    white_positions: tuple[Point, ...]
    black_positions: tuple[Point, ...]
    edges: tuple[Edge, ...]
    lattice: str = "custom"
    periods: tuple[Point, Point] | None = None
    white_cells: tuple[tuple, ...] = ()
    black_cells: tuple[tuple, ...] = ()
    name: str = ""
    meta: Mapping[str, object] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        n_white, n_black = len(self.white_positions), len(self.black_positions)
        for index, edge in enumerate(self.edges):
            if not (0 <= edge.white < n_white and 0 <= edge.black < n_black):
                raise MalformedSpec(f"Edge {index} joins missing vertices {edge.white}, {edge.black}.")
            if edge.weight <= 0:
                raise MalformedSpec(f"Edge {index} has non-positive weight {edge.weight}.")
            if edge.crossing != (0, 0) and self.periods is None:
                raise MalformedSpec(f"Edge {index} crosses a period but the graph is not periodic.")

    @property
    def n_white(self) -> int:
        return len(self.white_positions)

    @property
    def n_black(self) -> int:
        return len(self.black_positions)

    @property
    def n_vertices(self) -> int:
        return self.n_white + self.n_black

    @property
    def is_balanced(self) -> bool:
        return self.n_white == self.n_black

    @property
    def is_periodic(self) -> bool:
        return self.periods is not None

    def position(self, node: Node) -> Point:
        color, index = node
        return self.white_positions[index] if color == WHITE else self.black_positions[index]

    def shift(self, crossing: tuple[int, int]) -> Point:
        if self.periods is None or crossing == (0, 0):
            return (0.0, 0.0)
        (ax, ay), (bx, by) = self.periods
        return (crossing[0] * ax + crossing[1] * bx, crossing[0] * ay + crossing[1] * by)

    def displacement(self, edge_index: int, from_white: bool = True) -> Point:
        """Vector from one endpoint of the edge to the other, lifted to the plane."""
        edge = self.edges[edge_index]
        wx, wy = self.white_positions[edge.white]
        bx, by = self.black_positions[edge.black]
        sx, sy = self.shift(edge.crossing)
        dx, dy = bx + sx - wx, by + sy - wy
        return (dx, dy) if from_white else (-dx, -dy)

    def other_end(self, edge_index: int, node: Node) -> Node:
        edge = self.edges[edge_index]
        if node == (WHITE, edge.white):
            return (BLACK, edge.black)
        return (WHITE, edge.white)

    @cached_property
    def incidence(self) -> dict[Node, tuple[int, ...]]:
        table: dict[Node, list[int]] = defaultdict(list)
        for index, edge in enumerate(self.edges):
            table[(WHITE, edge.white)].append(index)
            table[(BLACK, edge.black)].append(index)
        return {node: tuple(items) for node, items in table.items()}

    def incident_edges(self, node: Node) -> tuple[int, ...]:
        return self.incidence.get(node, ())

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, int], tuple[int, ...]]:
        table: dict[tuple[int, int], list[int]] = defaultdict(list)
        for index, edge in enumerate(self.edges):
            table[(edge.white, edge.black)].append(index)
        return {pair: tuple(items) for pair, items in table.items()}

    def edges_between(self, white: int, black: int) -> tuple[int, ...]:
        return self.edge_lookup.get((white, black), ())

    @cached_property
    def rotation(self) -> dict[Node, tuple[int, ...]]:
        """Incident edges of every vertex in counter-clockwise order."""
        ordered = {}
        for node, items in self.incidence.items():
            from_white = node[0] == WHITE

            def angle(edge_index: int) -> float:
                dx, dy = self.displacement(edge_index, from_white)
                return math.atan2(dy, dx) % (2 * math.pi)

            ordered[node] = tuple(sorted(items, key=angle))
        return ordered

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        seen: set[tuple[int, bool]] = set()
        traced = []
        for start_edge in range(len(self.edges)):
            for start_forward in (True, False):
                if (start_edge, start_forward) in seen:
                    continue
                darts, nodes = [], []
                edge_index, forward = start_edge, start_forward
                x = y = area2 = 0.0
                while (edge_index, forward) not in seen:
                    seen.add((edge_index, forward))
                    edge = self.edges[edge_index]
                    tail = (WHITE, edge.white) if forward else (BLACK, edge.black)
                    head = (BLACK, edge.black) if forward else (WHITE, edge.white)
                    darts.append((edge_index, forward))
                    nodes.append(tail)
                    dx, dy = self.displacement(edge_index, forward)
                    area2 += x * (y + dy) - (x + dx) * y
                    x, y = x + dx, y + dy
                    ring = self.rotation[head]
                    position = ring.index(edge_index)
                    edge_index = ring[position - 1]
                    forward = head[0] == WHITE
                traced.append((tuple(darts), tuple(nodes), area2 / 2.0))
        outer_indices: set[int] = set()
        if not self.is_periodic and traced:
            outer_indices = {i for i, item in enumerate(traced) if item[2] < -1e-9}
            if not outer_indices:
                outer_indices = {min(range(len(traced)), key=lambda i: traced[i][2])}
        return tuple(
            Face(index=i, darts=darts, nodes=nodes, area=area, outer=i in outer_indices)
            for i, (darts, nodes, area) in enumerate(traced)
        )

    @property
    def bounded_faces(self) -> tuple[Face, ...]:
        return tuple(face for face in self.faces if not face.outer)

    @property
    def outer_face(self) -> Face | None:
        for face in self.faces:
            if face.outer:
                return face
        return None

    @cached_property
    def dart_faces(self) -> dict[tuple[int, bool], int]:
        table = {}
        for face in self.faces:
            for dart in face.darts:
                table[dart] = face.index
        return table

    def face_centroid(self, face: Face) -> Point:
        """Mean of the face corners, lifted from the first corner on a torus."""
        x0, y0 = self.position(face.nodes[0])
        xs, ys, x, y = [x0], [y0], x0, y0
        for edge_index, forward in face.darts[:-1]:
            dx, dy = self.displacement(edge_index, forward)
            x, y = x + dx, y + dy
            xs.append(x)
            ys.append(y)
        return (float(np.mean(xs)), float(np.mean(ys)))

    @cached_property
    def dual_graph(self) -> nx.MultiGraph:
        dual = nx.MultiGraph()
        dual.add_nodes_from(face.index for face in self.faces)
        for edge_index in range(len(self.edges)):
            left = self.dart_faces[(edge_index, True)]
            right = self.dart_faces[(edge_index, False)]
            dual.add_edge(left, right, key=edge_index)
        return dual

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(((WHITE, i) for i in range(self.n_white)), bipartite=0)
        graph.add_nodes_from(((BLACK, j) for j in range(self.n_black)), bipartite=1)
        for index, edge in enumerate(self.edges):
            graph.add_edge((WHITE, edge.white), (BLACK, edge.black), index=index)
        return graph

    def with_weights(self, weights: Sequence[Fraction]) -> "BipartiteGraph":
        if len(weights) != len(self.edges):
            raise MalformedSpec("One weight per edge is required.")
        edges = tuple(replace(edge, weight=exact.to_fraction(w)) for edge, w in zip(self.edges, weights))
        return replace(self, edges=edges)


def euler_characteristic(g: BipartiteGraph) -> int:
    touched = {node for node, items in g.incidence.items() if items}
    return len(touched) - len(g.edges) + len(g.faces)


def is_connected(g: BipartiteGraph) -> bool:
    graph = g.to_networkx()
    return graph.number_of_nodes() == 0 or nx.is_connected(graph)


def check_perfect(g: BipartiteGraph, matching: Iterable[int]) -> Matching:
    chosen = frozenset(int(e) for e in matching)
    if not g.is_balanced:
        raise MalformedSpec("An unbalanced graph has no perfect matching.")
    whites, blacks = set(), set()
    for edge_index in chosen:
        if not 0 <= edge_index < len(g.edges):
            raise MalformedSpec(f"Matching uses unknown edge {edge_index}.")
        edge = g.edges[edge_index]
        if edge.white in whites or edge.black in blacks:
            raise MalformedSpec(f"Matching covers a vertex twice at edge {edge_index}.")
        whites.add(edge.white)
        blacks.add(edge.black)
    if len(whites) != g.n_white or len(blacks) != g.n_black:
        raise MalformedSpec("Matching is not perfect.")
    return chosen


def matching_weight(g: BipartiteGraph, matching: Iterable[int]) -> Fraction:
    total = Fraction(1)
    for edge_index in matching:
        total *= g.edges[edge_index].weight
    return total


# --- Kasteleyn phasings -----------------------------------------------------------


@dataclass(frozen=True)
class KasteleynPhasing:
    exponents: tuple[int, ...]

    def unit(self, edge_index: int):
        return exact.unit(self.exponents[edge_index])

    def complex_units(self) -> np.ndarray:
        return np.array([1j**e for e in self.exponents], dtype=np.complex128)

    @property
    def is_real(self) -> bool:
        return all(e % 2 == 0 for e in self.exponents)


def required_face_sign(face: Face) -> int:
    """(-1)**(k+1) for a face with 2k sides."""
    half = face.length // 2
    return -1 if half % 2 == 0 else 1


def alternating_product(face: Face, values: Sequence[object]):
    """Product of values on white->black steps divided by values on black->white steps."""
    product = exact.ONE
    for edge_index, forward in face.darts:
        if forward:
            product = product * values[edge_index]
        else:
            product = product / values[edge_index]
    return product


def constrained_faces(g: BipartiteGraph) -> tuple[Face, ...]:
    return g.faces if g.is_periodic else g.bounded_faces


def verify_phasing(g: BipartiteGraph, phasing: KasteleynPhasing) -> bool:
    if len(phasing.exponents) != len(g.edges):
        raise MalformedSpec("The phasing must cover every edge.")
    units = [phasing.unit(e) for e in range(len(g.edges))]
    for face in constrained_faces(g):
        if alternating_product(face, units) != exact.unit(0 if required_face_sign(face) > 0 else 2):
            return False
    return True


def _lattice_phasing(g: BipartiteGraph) -> tuple[int, ...]:
    if g.lattice == "square":
        exponents = []
        for edge_index in range(len(g.edges)):
            dx, dy = g.displacement(edge_index)
            exponents.append(1 if abs(dy) > abs(dx) else 0)
        return tuple(exponents)
    return tuple(0 for _ in g.edges)


def solve_phasing(g: BipartiteGraph, base: Sequence[int] | None = None) -> KasteleynPhasing:
    """Adjust the edges of a dual spanning tree so that every constrained face is Kasteleyn.

    Non-tree edges keep their ``base`` exponent; tree edges are fixed from the
    leaves towards the root face, which is the outer face for planar graphs.
    """
    exponents = list(base) if base is not None else [0] * len(g.edges)
    if not g.faces:
        return KasteleynPhasing(tuple(exponents))
    dual = g.dual_graph
    roots = [face.index for face in g.faces if face.outer] or [0]
    parent_edge: dict[int, int] = {}
    order: list[int] = []
    visited: set[int] = set()
    # every component of the dual graph gets its own root
    for start in roots + [face.index for face in g.faces]:
        if start in visited:
            continue
        visited.add(start)
        queue = deque([start])
        while queue:
            current = queue.popleft()
            order.append(current)
            for _, neighbour, edge_index in sorted(dual.edges(current, keys=True), key=lambda item: item[2]):
                if neighbour in visited:
                    continue
                visited.add(neighbour)
                parent_edge[neighbour] = edge_index
                queue.append(neighbour)
    faces = g.faces
    for face_index in reversed(order):
        if face_index not in parent_edge:
            continue
        face = faces[face_index]
        tree_edge = parent_edge[face_index]
        others = exact.ONE
        direction = None
        for edge_index, forward in face.darts:
            if edge_index == tree_edge and direction is None:
                direction = forward
                continue
            unit = exact.unit(exponents[edge_index])
            others = others * unit if forward else others / unit
        target = exact.unit(0 if required_face_sign(face) > 0 else 2) / others
        exponent = next(k for k in range(4) if exact.unit(k) == target)
        exponents[tree_edge] = exponent if direction else (-exponent) % 4
    phasing = KasteleynPhasing(tuple(e % 4 for e in exponents))
    if not verify_phasing(g, phasing):
        raise MalformedSpec("No Kasteleyn phasing satisfies every face of this graph.")
    return phasing


def kasteleyn_phasing(g: BipartiteGraph) -> KasteleynPhasing:
    if g.is_periodic:
        declared = [edge.phase for edge in g.edges]
        if all(p is not None for p in declared):
            phasing = KasteleynPhasing(tuple(int(p) % 4 for p in declared))
            if verify_phasing(g, phasing):
                return phasing
            logger.warning("Declared phases of %s fail the face condition; solving instead", g.name or "graph")
        return solve_phasing(g, [0 if p is None else int(p) % 4 for p in declared])
    if g.lattice in ("square", "honeycomb"):
        phasing = KasteleynPhasing(_lattice_phasing(g))
        if verify_phasing(g, phasing):
            return phasing
        logger.info("Lattice phasing fails on %s (region with holes); solving on the dual tree", g.name or "graph")
        return solve_phasing(g, phasing.exponents)
    return solve_phasing(g)


# --- cycles and gauge ----------------------------------------------------------------


def _cycle_darts(g: BipartiteGraph, cycle: Sequence[Node]) -> list[tuple[int, bool]]:
    if len(cycle) < 4 or len(cycle) % 2:
        raise MalformedSpec("A cycle must have an even number (at least 4) of vertices.")
    if len(set(cycle)) != len(cycle):
        raise MalformedSpec("A cycle must not repeat vertices.")
    darts = []
    for position, node in enumerate(cycle):
        nxt = cycle[(position + 1) % len(cycle)]
        if node[0] == nxt[0]:
            raise MalformedSpec("Consecutive cycle vertices must have opposite colors.")
        white, black = (node, nxt) if node[0] == WHITE else (nxt, node)
        candidates = g.edges_between(white[1], black[1])
        if len(candidates) != 1:
            raise MalformedSpec(f"Cycle step {node} -> {nxt} is not a single edge.")
        darts.append((candidates[0], node[0] == WHITE))
    return darts


def _polygon(g: BipartiteGraph, cycle: Sequence[Node]) -> np.ndarray:
    return np.array([g.position(node) for node in cycle], dtype=float)


def enclosed_vertices(g: BipartiteGraph, cycle: Sequence[Node]) -> int:
    polygon = PolygonPath(_polygon(g, cycle), closed=False)
    on_cycle = set(cycle)
    others = [node for node in g.incidence if node not in on_cycle]
    if not others:
        return 0
    points = np.array([g.position(node) for node in others], dtype=float)
    return int(np.count_nonzero(polygon.contains_points(points)))


def cycle_sign(g: BipartiteGraph, phasing: KasteleynPhasing, cycle: Sequence[Node]) -> int:
    """Alternating product of the phases around a counter-clockwise simple cycle."""
    darts = _cycle_darts(g, cycle)
    xy = _polygon(g, cycle)
    signed = 0.5 * float(np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1]))
    if signed < 0:
        darts = [(edge_index, not forward) for edge_index, forward in reversed(darts)]
    product = exact.ONE
    for edge_index, forward in darts:
        unit = phasing.unit(edge_index)
        product = product * unit if forward else product / unit
    value = exact.real_part(product, what="cycle product")
    return 1 if value > 0 else -1


def expected_cycle_sign(length: int, enclosed: int) -> int:
    half = length // 2
    return -1 if (1 + half + enclosed) % 2 else 1


def gauge_equivalent(g: BipartiteGraph, w1: Sequence, w2: Sequence) -> bool:
    if g.is_periodic:
        raise MalformedSpec("Gauge equivalence is only decided for finite planar graphs.")
    first = [exact.gaussian(v) for v in w1]
    second = [exact.gaussian(v) for v in w2]
    if len(first) != len(g.edges) or len(second) != len(g.edges):
        raise MalformedSpec("One weight per edge is required.")
    return all(alternating_product(face, first) == alternating_product(face, second) for face in g.bounded_faces)


def gauge_transform(
    g: BipartiteGraph,
    white_scalings: Mapping[int, Fraction] | None = None,
    black_scalings: Mapping[int, Fraction] | None = None,
) -> BipartiteGraph:
    white_scalings = white_scalings or {}
    black_scalings = black_scalings or {}
    weights = []
    for edge in g.edges:
        factor = exact.to_fraction(white_scalings.get(edge.white, 1)) * exact.to_fraction(
            black_scalings.get(edge.black, 1)
        )
        if factor <= 0:
            raise MalformedSpec("Gauge scalings must be positive.")
        weights.append(edge.weight * factor)
    return g.with_weights(weights)


# --- periodic covers ---------------------------------------------------------------


def torus_cover(domain: BipartiteGraph, n: int) -> BipartiteGraph:
    """The n x n cover of a fundamental domain, still periodic with periods n * periods.

    Copies are ordered copy-major: vertex ``(cx, cy, v)`` gets index
    ``(cx * n + cy) * count + v`` for whites and blacks alike.
    """
    if domain.periods is None:
        raise MalformedSpec("Only periodic fundamental domains have torus covers.")
    if n < 1:
        raise MalformedSpec("The cover size must be a positive integer.")
    n_white, n_black = domain.n_white, domain.n_black
    whites, blacks, white_cells, black_cells = [], [], [], []
    for cx in range(n):
        for cy in range(n):
            sx, sy = domain.shift((cx, cy))
            whites.extend((x + sx, y + sy) for x, y in domain.white_positions)
            blacks.extend((x + sx, y + sy) for x, y in domain.black_positions)
            white_cells.extend((cx, cy, v) for v in range(n_white))
            black_cells.extend((cx, cy, v) for v in range(n_black))
    edges = []
    for cx in range(n):
        for cy in range(n):
            copy = cx * n + cy
            for edge in domain.edges:
                tx, ty = cx + edge.crossing[0], cy + edge.crossing[1]
                target = (tx % n) * n + (ty % n)
                edges.append(
                    replace(
                        edge,
                        white=copy * n_white + edge.white,
                        black=target * n_black + edge.black,
                        crossing=(tx // n, ty // n),
                    )
                )
    (ax, ay), (bx, by) = domain.periods
    return BipartiteGraph(
        white_positions=tuple(whites),
        black_positions=tuple(blacks),
        edges=tuple(edges),
        lattice=domain.lattice,
        periods=((n * ax, n * ay), (n * bx, n * by)),
        white_cells=tuple(white_cells),
        black_cells=tuple(black_cells),
        name=f"{domain.name or 'domain'}x{n}",
        meta={"domain": domain.name, "n": n},
    )


__all__ = [
    "BLACK",
    "WHITE",
    "BipartiteGraph",
    "Edge",
    "Face",
    "KasteleynPhasing",
    "Matching",
    "alternating_product",
    "check_perfect",
    "constrained_faces",
    "cycle_sign",
    "enclosed_vertices",
    "euler_characteristic",
    "expected_cycle_sign",
    "gauge_equivalent",
    "gauge_transform",
    "is_connected",
    "kasteleyn_phasing",
    "matching_weight",
    "required_face_sign",
    "solve_phasing",
    "torus_cover",
    "verify_phasing",
]
