"""Lattice region builders and the versioned region JSON document.

A region document looks like::

    {"version": 1, "lattice": "square", "rectangle": [8, 8], "remove": [[0, 0], [7, 7]]}
    {"version": 1, "lattice": "honeycomb", "hexagon": [2, 2, 2], "weights": {"a": "2"}}
    {"version": 1, "lattice": "honeycomb", "torus": {"ell": 1}, "weights": {"b": "1/2"}}
    {"version": 1, "lattice": "custom", "white": [[0, 0]], "black": [[1, 0]],
     "edges": [{"white": 0, "black": 0, "weight": "1"}]}

Square cells are integer points ``[i, j]`` (white when ``i + j`` is even).
Honeycomb cells are triangles ``["up", i, j]`` (white) and ``["down", i, j]``
(black) of the triangular lattice spanned by ``e1 = (1, 0)`` and
``e2 = (1/2, sqrt(3)/2)``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .constants import REGION_SCHEMA_VERSION, lattice_by_key
from .exact import to_fraction
from .exceptions import MalformedSpec
from .graphs import BipartiteGraph, Edge

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
HONEYCOMB_LABELS = ("a", "b", "c")
SQUARE_LABELS = ("h", "v")


def _weights(raw: Mapping | None, labels: Iterable[str]) -> dict[str, Fraction]:
    raw = dict(raw or {})
    table = {label: Fraction(1) for label in labels}
    for key, value in raw.items():
        if key not in table:
            raise MalformedSpec(f"Unknown weight label {key!r}; expected one of {sorted(table)}.")
        table[key] = to_fraction(value)
        if table[key] <= 0:
            raise MalformedSpec(f"Weight {key} must be positive.")
    return table


def _flag_unbalanced(g: BipartiteGraph) -> BipartiteGraph:
    if not g.is_balanced:
        logger.warning(
            "Region %s is unbalanced: %d white, %d black vertices", g.name or "(unnamed)", g.n_white, g.n_black
        )
    return g


# --- square grid -------------------------------------------------------------------


def square_region(
    cells: Iterable[tuple[int, int]],
    weights: Mapping | None = None,
    name: str = "",
) -> BipartiteGraph:
    table = _weights(weights, SQUARE_LABELS)
    cell_set = sorted({(int(i), int(j)) for i, j in cells})
    whites = [c for c in cell_set if (c[0] + c[1]) % 2 == 0]
    blacks = [c for c in cell_set if (c[0] + c[1]) % 2 == 1]
    black_index = {c: k for k, c in enumerate(blacks)}
    edges = []
    for w_index, (i, j) in enumerate(whites):
        for di, dj, label in ((1, 0, "h"), (-1, 0, "h"), (0, 1, "v"), (0, -1, "v")):
            neighbour = (i + di, j + dj)
            if neighbour in black_index:
                edges.append(Edge(w_index, black_index[neighbour], table[label], label))
    g = BipartiteGraph(
        white_positions=tuple((float(i), float(j)) for i, j in whites),
        black_positions=tuple((float(i), float(j)) for i, j in blacks),
        edges=tuple(edges),
        lattice="square",
        white_cells=tuple(whites),
        black_cells=tuple(blacks),
        name=name,
    )
    return _flag_unbalanced(g)


def rectangle_cells(m: int, n: int) -> list[tuple[int, int]]:
    if m < 1 or n < 1:
        raise MalformedSpec("Rectangle sides must be positive.")
    return [(i, j) for i in range(m) for j in range(n)]


def rectangle(m: int, n: int, weights: Mapping | None = None, remove: Iterable = ()) -> BipartiteGraph:
    removed = {(int(i), int(j)) for i, j in remove}
    cells = [c for c in rectangle_cells(m, n) if c not in removed]
    return square_region(cells, weights, name=f"rectangle-{m}x{n}")


def corner_deleted_board(size: int = 8) -> BipartiteGraph:
    return rectangle(size, size, remove=[(0, 0), (size - 1, size - 1)])


# --- honeycomb ---------------------------------------------------------------------


def triangle_centroid(kind: str, i: int, j: int) -> tuple[float, float]:
    if kind == "up":
        return (i + j / 2 + 0.5, (j + 1 / 3) * SQRT3 / 2)
    return (i + j / 2 + 1.0, (j + 2 / 3) * SQRT3 / 2)


def honeycomb_region(
    cells: Iterable[tuple[str, int, int]],
    weights: Mapping | None = None,
    name: str = "",
) -> BipartiteGraph:
    table = _weights(weights, HONEYCOMB_LABELS)
    ups, downs = set(), set()
    for cell in cells:
        kind, i, j = str(cell[0]), int(cell[1]), int(cell[2])
        if kind == "up":
            ups.add((i, j))
        elif kind == "down":
            downs.add((i, j))
        else:
            raise MalformedSpec(f"Honeycomb cells are 'up' or 'down' triangles, not {kind!r}.")
    whites, blacks = sorted(ups), sorted(downs)
    black_index = {c: k for k, c in enumerate(blacks)}
    edges = []
    for w_index, (i, j) in enumerate(whites):
        for neighbour, label in (((i, j), "a"), ((i - 1, j), "b"), ((i, j - 1), "c")):
            if neighbour in black_index:
                edges.append(Edge(w_index, black_index[neighbour], table[label], label))
    g = BipartiteGraph(
        white_positions=tuple(triangle_centroid("up", i, j) for i, j in whites),
        black_positions=tuple(triangle_centroid("down", i, j) for i, j in blacks),
        edges=tuple(edges),
        lattice="honeycomb",
        white_cells=tuple(("up", i, j) for i, j in whites),
        black_cells=tuple(("down", i, j) for i, j in blacks),
        name=name,
    )
    return _flag_unbalanced(g)


def hexagon_cells(a: int, b: int, c: int, offset: tuple[int, int] = (0, 0)) -> list[tuple[str, int, int]]:
    """Triangles of the A x B x C hexagon with corners (0,0), (A,0), (A,B), (A-C,B+C), (-C,B+C), (-C,C)."""
    if min(a, b, c) < 0:
        raise MalformedSpec("Hexagon sides must be non-negative.")
    ox, oy = offset
    cells = []
    for i in range(-c - 1, a + 1):
        for j in range(-1, b + c + 1):
            if j >= 0 and i + 1 <= a and i + j + 1 <= a + b and j + 1 <= b + c and i >= -c and i + j >= 0:
                cells.append(("up", i + ox, j + oy))
            if j >= 0 and i + 1 <= a and i + j + 2 <= a + b and j + 1 <= b + c and i >= -c and i + j + 1 >= 0:
                cells.append(("down", i + ox, j + oy))
    return cells


def hexagon(a: int, b: int, c: int, weights: Mapping | None = None) -> BipartiteGraph:
    return honeycomb_region(hexagon_cells(a, b, c), weights, name=f"hexagon-{a}x{b}x{c}")


def glued_hexagons(first: int, second: int) -> BipartiteGraph:
    """Regular hexagons of sides ``first`` and ``second`` sharing a side of length ``min``."""
    small, large = sorted((first, second))
    cells = hexagon_cells(small, small, small) + hexagon_cells(large, large, large, offset=(small + large, -large))
    return honeycomb_region(cells, name=f"glued-{first}-{second}")


# --- fundamental domains -----------------------------------------------------------


def honeycomb_domain(weights: Mapping | None = None) -> BipartiteGraph:
    """One white and one black triangle; P(z, w) = a + b z + c w."""
    table = _weights(weights, HONEYCOMB_LABELS)
    return BipartiteGraph(
        white_positions=(triangle_centroid("up", 0, 0),),
        black_positions=(triangle_centroid("down", 0, 0),),
        edges=(
            Edge(0, 0, table["a"], "a", (0, 0), 0),
            Edge(0, 0, table["b"], "b", (1, 0), 0),
            Edge(0, 0, table["c"], "c", (0, 1), 0),
        ),
        lattice="honeycomb",
        periods=((-1.0, 0.0), (-0.5, -SQRT3 / 2)),
        white_cells=(("up", 0, 0),),
        black_cells=(("down", 0, 0),),
        name="honeycomb-1",
    )


def square_pair_domain(weights: Mapping | None = None) -> BipartiteGraph:
    """Two-vertex domain of Z^2 with periods (1,1), (-1,1); P(z, w) = 1 + z + w - z w."""
    table = _weights(weights, SQUARE_LABELS)
    h, v = table["h"], table["v"]
    return BipartiteGraph(
        white_positions=((0.0, 0.0),),
        black_positions=((0.0, -1.0),),
        edges=(
            Edge(0, 0, v, "v", (0, 0), 0),
            Edge(0, 0, h, "h", (1, 0), 0),
            Edge(0, 0, h, "h", (0, 1), 0),
            Edge(0, 0, v, "v", (1, 1), 2),
        ),
        lattice="square",
        periods=((1.0, 1.0), (-1.0, 1.0)),
        white_cells=((0, 0),),
        black_cells=((0, -1),),
        name="square-1",
    )


def square_domain(ell: int, weights: Mapping | None = None) -> BipartiteGraph:
    """ell x ell block of Z^2 with axis periods; vertical edges signed (-1)**x."""
    if ell == 1:
        return square_pair_domain(weights)
    if ell < 2 or ell % 2:
        raise MalformedSpec("Square fundamental domains need ell = 1 or an even ell.")
    table = _weights(weights, SQUARE_LABELS)
    cells = [(x, y) for x in range(ell) for y in range(ell)]
    whites = [c for c in cells if (c[0] + c[1]) % 2 == 0]
    blacks = [c for c in cells if (c[0] + c[1]) % 2 == 1]
    black_index = {c: k for k, c in enumerate(blacks)}
    edges = []
    for w_index, (x, y) in enumerate(whites):
        for dx, dy, label in ((1, 0, "h"), (-1, 0, "h"), (0, 1, "v"), (0, -1, "v")):
            tx, ty = x + dx, y + dy
            crossing = (tx // ell, ty // ell)
            target = black_index[(tx % ell, ty % ell)]
            phase = 2 if label == "v" and x % 2 else 0
            edges.append(Edge(w_index, target, table[label], label, crossing, phase))
    return BipartiteGraph(
        white_positions=tuple((float(x), float(y)) for x, y in whites),
        black_positions=tuple((float(x), float(y)) for x, y in blacks),
        edges=tuple(edges),
        lattice="square",
        periods=((float(ell), 0.0), (0.0, float(ell))),
        white_cells=tuple(whites),
        black_cells=tuple(blacks),
        name=f"square-{ell}",
    )


def square_3x2_domain(a=1, b=2, c=1, d=1, e=1) -> BipartiteGraph:
    """Six-vertex domain of Z^2 modulo (3,1) and (0,2) with five labelled weights.

    With b = 2 and the rest 1 the characteristic polynomial is
    9 - 2w + 1/w^2 - 7/w + 1/z + z/w.
    """
    a, b, c, d, e = (to_fraction(x) for x in (a, b, c, d, e))
    one = Fraction(1)
    edges = (
        Edge(0, 0, one, "", (0, 0), 2),
        Edge(0, 0, one, "", (0, -1), 0),
        Edge(0, 1, one, "", (0, 0), 0),
        Edge(0, 2, e, "e", (-1, 0), 0),
        Edge(1, 0, c, "c", (0, 0), 0),
        Edge(1, 1, a, "a", (0, 0), 0),
        Edge(1, 1, one, "", (0, 1), 2),
        Edge(1, 2, d, "d", (0, 0), 0),
        Edge(2, 0, one, "", (1, -1), 0),
        Edge(2, 1, one, "", (0, 0), 0),
        Edge(2, 2, b, "b", (0, 0), 2),
        Edge(2, 2, one, "", (0, -1), 0),
    )
    return BipartiteGraph(
        white_positions=((0.0, 0.0), (1.0, 1.0), (2.0, 0.0)),
        black_positions=((0.0, 1.0), (1.0, 0.0), (2.0, 1.0)),
        edges=edges,
        lattice="square",
        periods=((3.0, 1.0), (0.0, 2.0)),
        white_cells=((0, 0), (1, 1), (2, 0)),
        black_cells=((0, 1), (1, 0), (2, 1)),
        name="square-3x2",
    )


def cylinder(m: int, n: int, weights: Mapping | None = None) -> BipartiteGraph:
    """m x n square grid whose columns wrap around (m even); counted by brute force only."""
    if m < 2 or m % 2 or n < 1:
        raise MalformedSpec("Cylinders need an even circumference m >= 2 and n >= 1 rows.")
    table = _weights(weights, SQUARE_LABELS)
    cells = rectangle_cells(m, n)
    whites = [c for c in cells if (c[0] + c[1]) % 2 == 0]
    blacks = [c for c in cells if (c[0] + c[1]) % 2 == 1]
    black_index = {c: k for k, c in enumerate(blacks)}
    edges = []
    for w_index, (i, j) in enumerate(whites):
        for di, dj, label in ((1, 0, "h"), (-1, 0, "h"), (0, 1, "v"), (0, -1, "v")):
            ti, tj = i + di, j + dj
            if not 0 <= tj < n:
                continue
            edges.append(Edge(w_index, black_index[(ti % m, tj)], table[label], label, (ti // m, 0), 0))
    return BipartiteGraph(
        white_positions=tuple((float(i), float(j)) for i, j in whites),
        black_positions=tuple((float(i), float(j)) for i, j in blacks),
        edges=tuple(edges),
        lattice="square",
        periods=((float(m), 0.0), (0.0, float(n))),
        white_cells=tuple(whites),
        black_cells=tuple(blacks),
        name=f"cylinder-{m}x{n}",
        meta={"cylinder": (m, n)},
    )


def fundamental_domain(lattice: str, ell: int = 1, weights: Mapping | None = None) -> BipartiteGraph:
    family = lattice_by_key(lattice)
    if family is None:
        raise MalformedSpec(f"Unknown lattice {lattice!r}.")
    if family.key == "honeycomb":
        if ell != 1:
            raise MalformedSpec("Honeycomb fundamental domains are built with ell = 1; use torus covers.")
        return honeycomb_domain(weights)
    if family.key == "square":
        return square_domain(ell, weights)
    raise MalformedSpec("Custom fundamental domains are given as explicit vertex and edge lists.")


def three_by_one(a=1, b=1, c=1) -> BipartiteGraph:
    """The 3 x 2 vertex grid with three square faces; weights a, b, c on the middle rungs.

    Its Kasteleyn determinant is -a - c - abc, so Z = a + c + abc.
    """
    a, b, c = (to_fraction(x) for x in (a, b, c))
    base = rectangle(3, 2)
    weights = []
    for edge in base.edges:
        wx, wy = base.white_positions[edge.white]
        bx, by = base.black_positions[edge.black]
        if edge.label == "v" and wx == 0:
            weights.append(a)
        elif edge.label == "v" and wx == 1:
            weights.append(b)
        elif edge.label == "v" and wx == 2:
            weights.append(c)
        else:
            weights.append(Fraction(1))
    return replace(base.with_weights(weights), name="three-by-one")


# --- JSON -------------------------------------------------------------------------


def _fraction_text(value: Fraction) -> str:
    return str(value)


def region_to_json(g: BipartiteGraph) -> dict:
    doc = {
        "version": REGION_SCHEMA_VERSION,
        "lattice": "custom" if g.lattice not in ("square", "honeycomb") else g.lattice,
        "name": g.name,
        "white": [list(p) for p in g.white_positions],
        "black": [list(p) for p in g.black_positions],
        "white_cells": [list(c) for c in g.white_cells],
        "black_cells": [list(c) for c in g.black_cells],
        "edges": [
            {
                "white": edge.white,
                "black": edge.black,
                "weight": _fraction_text(edge.weight),
                "label": edge.label,
                "crossing": list(edge.crossing),
                "phase": edge.phase,
            }
            for edge in g.edges
        ],
    }
    if g.periods is not None:
        doc["periods"] = [list(p) for p in g.periods]
    return doc


def _explicit_graph(doc: Mapping, lattice: str) -> BipartiteGraph:
    try:
        whites = tuple((float(x), float(y)) for x, y in doc["white"])
        blacks = tuple((float(x), float(y)) for x, y in doc["black"])
        edges = tuple(
            Edge(
                white=int(item["white"]),
                black=int(item["black"]),
                weight=to_fraction(item.get("weight", 1)),
                label=str(item.get("label", "")),
                crossing=tuple(int(v) for v in item.get("crossing", (0, 0))),
                phase=None if item.get("phase") is None else int(item["phase"]),
            )
            for item in doc["edges"]
        )
        periods = doc.get("periods")
        if periods is not None:
            periods = tuple((float(x), float(y)) for x, y in periods)
            if len(periods) != 2:
                raise MalformedSpec("A periodic graph needs exactly two periods.")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedSpec):
            raise
        raise MalformedSpec(f"Malformed explicit graph: {exc}") from exc
    return BipartiteGraph(
        white_positions=whites,
        black_positions=blacks,
        edges=edges,
        lattice=lattice,
        periods=periods,
        white_cells=tuple(tuple(c) for c in doc.get("white_cells", ())),
        black_cells=tuple(tuple(c) for c in doc.get("black_cells", ())),
        name=str(doc.get("name", "")),
    )


def region_from_json(doc: Mapping) -> BipartiteGraph:
    if not isinstance(doc, Mapping):
        raise MalformedSpec("A region document must be a JSON object.")
    version = doc.get("version")
    if version != REGION_SCHEMA_VERSION:
        raise MalformedSpec(f"Unsupported region document version {version!r}.")
    family = lattice_by_key(doc.get("lattice"))
    if family is None:
        raise MalformedSpec(f"Unknown lattice {doc.get('lattice')!r}.")
    weights = doc.get("weights")
    if "white" in doc:
        return _explicit_graph(doc, family.key)
    if family.key == "custom":
        raise MalformedSpec("Custom regions need 'white', 'black' and 'edges'.")
    name = str(doc.get("name", ""))
    remove = doc.get("remove", ())
    if "torus" in doc:
        spec = doc["torus"] or {}
        g = fundamental_domain(family.key, int(spec.get("ell", 1)), weights)
        return g
    if family.key == "square":
        if "rectangle" in doc:
            m, n = (int(v) for v in doc["rectangle"])
            g = rectangle(m, n, weights, remove)
        elif "cells" in doc:
            removed = {tuple(int(v) for v in c) for c in remove}
            cells = [tuple(int(v) for v in c) for c in doc["cells"]]
            g = square_region([c for c in cells if c not in removed], weights)
        else:
            raise MalformedSpec("Square regions need 'rectangle', 'cells' or 'torus'.")
    else:
        if "hexagon" in doc:
            a, b, c = (int(v) for v in doc["hexagon"])
            cells = hexagon_cells(a, b, c)
        elif "cells" in doc:
            cells = [(str(c[0]), int(c[1]), int(c[2])) for c in doc["cells"]]
        else:
            raise MalformedSpec("Honeycomb regions need 'hexagon', 'cells' or 'torus'.")
        removed = {(str(c[0]), int(c[1]), int(c[2])) for c in remove}
        g = honeycomb_region([c for c in cells if c not in removed], weights)
    if name:
        g = replace(g, name=name)
    return g


def load_region(path: str | Path) -> BipartiteGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MalformedSpec(f"Cannot read region file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedSpec(f"Region file {path} is not valid JSON: {exc}") from exc
    return region_from_json(doc)


def build_region(source: Mapping | str | Path | BipartiteGraph) -> BipartiteGraph:
    """Accept a region document, a path to one, or an already built graph."""
    if isinstance(source, BipartiteGraph):
        return source
    if isinstance(source, Mapping):
        return region_from_json(source)
    return load_region(source)


__all__ = [
    "build_region",
    "corner_deleted_board",
    "cylinder",
    "fundamental_domain",
    "glued_hexagons",
    "hexagon",
    "hexagon_cells",
    "honeycomb_domain",
    "honeycomb_region",
    "load_region",
    "rectangle",
    "rectangle_cells",
    "region_from_json",
    "region_to_json",
    "square_3x2_domain",
    "square_domain",
    "square_pair_domain",
    "square_region",
    "three_by_one",
    "triangle_centroid",
]
