"""Versioned JSON, CSV and SVG output.

Every document names the package version: JSON objects carry a ``"version"``
key, CSV files start with ``# dimerlab <version>`` and SVG files with the
comment ``<!-- dimerlab <version> -->``.

SVG geometry: one lattice unit is ``UNIT`` pixels, the y axis points up (it is
negated on output) and the view box is the bounding box of the drawing padded
by half a unit.  Square cells are unit squares centred on their integer
points; honeycomb cells are the unit triangles of the triangular lattice.
"""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder
from django.template.loader import render_to_string

import dimerlab

from .exceptions import MalformedSpec
from .graphs import BipartiteGraph
from .limit_shape import to_plane

UNIT = 20
STROKE = 0.5
SQRT3 = math.sqrt(3.0)

LABEL_COLOURS = {
    "a": "#e6550d",
    "h": "#e6550d",
    "b": "#3182bd",
    "v": "#3182bd",
    "c": "#31a354",
}
DEFAULT_COLOUR = "#bdbdbd"
COMPONENT_COLOURS = ("#fdae6b", "#9ecae1", "#a1d99b", "#bcbddc", "#fdd0a2", "#c7e9c0")


def version() -> str:
    return dimerlab.__version__


class DimerJSONEncoder(DjangoJSONEncoder):
    """Fractions as exact strings, numpy scalars and arrays as plain Python values."""

    def default(self, o):
        if isinstance(o, Fraction):
            return str(o) if o.denominator != 1 else o.numerator
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        if isinstance(o, complex):
            return [o.real, o.imag]
        return super().default(o)


def stamped(payload: Mapping) -> dict:
    document = {"version": version()}
    document.update(payload)
    return document


def dumps(payload: Mapping) -> str:
    return json.dumps(stamped(payload), cls=DimerJSONEncoder, indent=2, sort_keys=True) + "\n"


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def exact_text(value) -> str:
    """Exact integers in base 10, other rationals as p/q."""
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# dimerlab {version()}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def write_text(path: str | Path | None, text: str) -> str:
    """Write ``text`` to ``path`` unless it is None or "-"; the text is returned either way."""
    if path not in (None, "-", ""):
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    return text


# --- SVG ---------------------------------------------------------------------------


def _lattice_point(i: int, j: int) -> tuple[float, float]:
    return (i + j / 2, j * SQRT3 / 2)


def cell_corners(lattice: str, cell) -> list[tuple[float, float]]:
    if lattice == "square":
        i, j = cell
        return [(i - 0.5, j - 0.5), (i + 0.5, j - 0.5), (i + 0.5, j + 0.5), (i - 0.5, j + 0.5)]
    if lattice == "honeycomb":
        kind, i, j = cell
        if kind == "up":
            return [_lattice_point(i, j), _lattice_point(i + 1, j), _lattice_point(i, j + 1)]
        return [_lattice_point(i + 1, j), _lattice_point(i + 1, j + 1), _lattice_point(i, j + 1)]
    raise MalformedSpec(f"No cell geometry for lattice {lattice!r}.")


def _tile(corners: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    unique = sorted({(round(x, 9), round(y, 9)) for x, y in corners})
    cx = sum(p[0] for p in unique) / len(unique)
    cy = sum(p[1] for p in unique) / len(unique)
    return sorted(unique, key=lambda p: math.atan2(p[1] - cy, p[0] - cx))


def _points(points: Iterable[tuple[float, float]]) -> str:
    return " ".join(f"{x * UNIT:.3f},{-y * UNIT:.3f}" for x, y in points)


def _frame(points: np.ndarray) -> dict:
    x0, y0 = points.min(axis=0) - 0.5
    x1, y1 = points.max(axis=0) + 0.5
    width, height = (x1 - x0) * UNIT, (y1 - y0) * UNIT
    return {
        "view_box": f"{x0 * UNIT:.3f} {-y1 * UNIT:.3f} {width:.3f} {height:.3f}",
        "width": f"{width:.0f}",
        "height": f"{height:.0f}",
        "stroke": STROKE,
        "version": version(),
    }


def tiling_svg(g: BipartiteGraph, matching: Iterable[int], title: str = "") -> str:
    """Dominoes as rectangles and lozenges as rhombi coloured by edge label.

    Graphs without cell geometry are drawn as the matched edges.
    """
    matching = sorted(matching)
    tiles, lines, every = [], [], []
    has_cells = g.lattice in ("square", "honeycomb") and g.white_cells and not g.is_periodic
    for edge_index in matching:
        edge = g.edges[edge_index]
        if has_cells:
            corners = cell_corners(g.lattice, g.white_cells[edge.white]) + cell_corners(
                g.lattice, g.black_cells[edge.black]
            )
            polygon = _tile(corners)
            every.extend(polygon)
            tiles.append({"points": _points(polygon), "fill": LABEL_COLOURS.get(edge.label, DEFAULT_COLOUR)})
        else:
            (wx, wy), (bx, by) = g.white_positions[edge.white], g.black_positions[edge.black]
            sx, sy = g.shift(edge.crossing)
            bx, by = bx + sx, by + sy
            every.extend([(wx, wy), (bx, by)])
            lines.append((f"{wx * UNIT:.3f}", f"{-wy * UNIT:.3f}", f"{bx * UNIT:.3f}", f"{-by * UNIT:.3f}"))
    if not every:
        every = [(0.0, 0.0)]
    context = _frame(np.array(every, dtype=float))
    context.update(tiles=tiles, lines=lines, title=title or g.name)
    return render_to_string("dimers/tiling.svg", context)


def _run_paths(mask: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> str:
    """Row runs of a boolean raster [ix, iy] as one SVG path of rectangles."""
    dx = float(xs[1] - xs[0]) if len(xs) > 1 else 1.0
    dy = float(ys[1] - ys[0]) if len(ys) > 1 else 1.0
    commands = []
    for iy in range(mask.shape[1]):
        column = mask[:, iy]
        ix = 0
        while ix < len(column):
            if not column[ix]:
                ix += 1
                continue
            start = ix
            while ix < len(column) and column[ix]:
                ix += 1
            x = (xs[start] - dx / 2) * UNIT
            y = -(ys[iy] + dy / 2) * UNIT
            commands.append(f"M{x:.3f} {y:.3f}h{(ix - start) * dx * UNIT:.3f}v{dy * UNIT:.3f}h{-(ix - start) * dx * UNIT:.3f}z")
    return "".join(commands)


def amoeba_svg(raster, title: str = "amoeba") -> str:
    """Amoeba cells in grey, bounded complement components in colour with their slope as a tooltip."""
    components = []
    for k, component in enumerate(raster.bounded):
        components.append(
            {
                "d": _run_paths(raster.labels == component.label, raster.xs, raster.ys),
                "fill": COMPONENT_COLOURS[k % len(COMPONENT_COLOURS)],
                "title": f"slope {component.lattice_point[0]} {component.lattice_point[1]}",
            }
        )
    corners = np.array([[raster.xs[0], raster.ys[0]], [raster.xs[-1], raster.ys[-1]]], dtype=float)
    context = _frame(corners)
    context.update(amoeba=_run_paths(raster.member, raster.xs, raster.ys), components=components, title=title)
    return render_to_string("dimers/amoeba.svg", context)


def limit_shape_svg(polygon, boundary=None, field=None, title: str = "") -> str:
    """Polygon outline, liquid region of a slope field and the traced frozen boundary, in the plane."""
    outline = to_plane(np.array(polygon.vertices, dtype=float))
    curves = []
    if boundary is not None:
        for segment in boundary.segments:
            curves.append(_points(to_plane(segment)))
    liquid = ""
    if field is not None:
        cells = []
        dx, dy = field.spacing
        for j, i in np.argwhere(field.liquid):
            x, y = field.xs[i], field.ys[j]
            square = [[x - dx / 2, y - dy / 2], [x + dx / 2, y - dy / 2], [x + dx / 2, y + dy / 2], [x - dx / 2, y + dy / 2]]
            quad = to_plane(np.array(square))
            cells.append("M" + "L".join(f"{px * UNIT:.3f} {-py * UNIT:.3f}" for px, py in quad) + "z")
        liquid = "".join(cells)
    context = _frame(outline)
    context.update(polygon=_points(outline), curves=curves, liquid=liquid, title=title or polygon.name)
    return render_to_string("dimers/limit_shape.svg", context)


__all__ = [
    "DimerJSONEncoder",
    "amoeba_svg",
    "cell_corners",
    "csv_text",
    "dumps",
    "exact_text",
    "format_value",
    "limit_shape_svg",
    "read_csv",
    "stamped",
    "tiling_svg",
    "version",
    "write_text",
]
