"""Honeycomb limit shapes: complex Burgers solutions and discrete surface-tension minimisation.

Coordinates are lattice coordinates (x, y) with the plane point x e1 + y e2,
e1 = (1, 0) and e2 = (-1/2, sqrt(3)/2); the third lattice direction is
e3 = -e1 - e2 = (-1, -1).  The height gradient is (s, t) = (h_x, h_y) and
the slope triangle is 0 <= s, t and s + t <= 1.

At a liquid point 1 + z + w = 0 with Im z > 0 and
(s, t) = (arg(-w) / pi, arg(-1/z) / pi).  A curve Q0 gives the solution
Q0(z, x z + y w) = 0; with the volume multiplier c it is
Q(e^(-cx) z, e^(-cy) w) = 0.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Mapping, Sequence

import contourpy
import numpy as np
import sympy as sp
from matplotlib.path import Path as PolygonPath
from matplotlib.tri import LinearTriInterpolator, Triangulation
from scipy import ndimage, optimize, sparse

from .amoeba import batched_roots, lobachevsky
from .conf import resolve
from .exceptions import AmbiguousBranch, InfeasibleInput, MalformedSpec, ToleranceFailure
from .polynomials import LaurentPoly2, polynomial

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)

# lattice directions as (dx, dy) in lattice coordinates
DIRECTIONS: tuple[tuple[int, int], ...] = ((1, 0), (0, 1), (-1, -1))

FACET_LEFT = "left"
FACET_MIDDLE = "middle"
FACET_RIGHT = "right"
FACETS: dict[str, tuple[float, float]] = {
    FACET_LEFT: (1.0, 0.0),
    FACET_MIDDLE: (0.0, 0.0),
    FACET_RIGHT: (0.0, 1.0),
}
FACET_ORDER = (FACET_LEFT, FACET_MIDDLE, FACET_RIGHT)


def to_plane(points) -> np.ndarray:
    """Lattice coordinates to Euclidean coordinates of the plane."""
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    return np.stack([x - y / 2, y * SQRT3 / 2], axis=-1)


def from_plane(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    X, Y = points[..., 0], points[..., 1]
    y = 2 * Y / SQRT3
    return np.stack([X + y / 2, y], axis=-1)


# --- surface tension ---------------------------------------------------------------


def sigma(s, t):
    """Honeycomb surface tension -(L(pi s) + L(pi t) + L(pi (1 - s - t))) / pi, vectorised."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    u = 1.0 - s - t
    total = lobachevsky(math.pi * s, "dilog") + lobachevsky(math.pi * t, "dilog") + lobachevsky(math.pi * u, "dilog")
    return -np.asarray(total) / math.pi


def sigma_gradient(s, t, clip: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """(d sigma / ds, d sigma / dt) = (log(sin pi s / sin pi u), log(sin pi t / sin pi u)), u = 1 - s - t."""
    s = np.clip(np.asarray(s, dtype=float), clip, 1 - clip)
    t = np.clip(np.asarray(t, dtype=float), clip, 1 - clip)
    u = np.clip(1.0 - s - t, clip, 1 - clip)
    sin_u = np.sin(math.pi * u)
    return np.log(np.sin(math.pi * s) / sin_u), np.log(np.sin(math.pi * t) / sin_u)


# --- curves ------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneCurveQ:
    """Q(u, v) = sum c_ij u^i v^j with i, j >= 0, and the volume multiplier c (0 for none)."""

    terms: tuple[tuple[tuple[int, int], float], ...]
    c: float = 0.0

    @classmethod
    def from_poly(cls, poly: LaurentPoly2 | str | Mapping, c: float = 0.0) -> "PlaneCurveQ":
        poly = polynomial(poly)
        if poly.is_zero:
            raise MalformedSpec("The zero polynomial defines no curve.")
        if any(i < 0 or j < 0 for i, j in poly.support):
            raise MalformedSpec("Limit-shape curves are polynomials in u and v.")
        return cls(tuple((k, float(v)) for k, v in poly.terms), float(c))

    @property
    def degree(self) -> int:
        return max(i + j for (i, j), _ in self.terms)

    @property
    def coefficients(self) -> dict[tuple[int, int], float]:
        return dict(self.terms)

    def to_sympy(self, u, v) -> sp.Expr:
        return sp.Add(*(sp.Float(value) * u**i * v**j for (i, j), value in self.terms))

    def to_poly(self) -> LaurentPoly2:
        return LaurentPoly2.from_mapping({k: Fraction(v).limit_denominator(10**12) for k, v in self.terms})

    def normalized(self) -> "PlaneCurveQ":
        scale = max(self.terms, key=lambda item: abs(item[1]))[1]
        return PlaneCurveQ(tuple((k, v / scale) for k, v in self.terms if abs(v / scale) > 1e-14), self.c)

    def to_json(self) -> dict:
        return {"terms": [[i, j, repr(v)] for (i, j), v in self.terms], "c": self.c}

    @classmethod
    def from_json(cls, doc: Mapping) -> "PlaneCurveQ":
        try:
            terms = tuple(((int(i), int(j)), float(v)) for i, j, v in doc["terms"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedSpec(f"Malformed curve document: {exc}") from exc
        return cls(terms, float(doc.get("c", 0.0)))


def curve(value, c: float | None = None) -> PlaneCurveQ:
    if isinstance(value, PlaneCurveQ):
        return value if c is None else PlaneCurveQ(value.terms, float(c))
    if isinstance(value, Mapping) and "c" in value:
        parsed = PlaneCurveQ.from_json(value)
        return parsed if c is None else PlaneCurveQ(parsed.terms, float(c))
    return PlaneCurveQ.from_poly(value, 0.0 if c is None else c)


HEXAGON_CURVE = "1 + z + z**2 - w**2"


def matching_volume_curve(Q0, c: float) -> PlaneCurveQ:
    """c^n Q0(u, -(1 + u + v) / c): its volume-constrained solution tends to that of Q0 as c -> 0."""
    if c == 0:
        raise MalformedSpec("The volume multiplier must be non-zero.")
    base = curve(Q0)
    u, v = sp.symbols("u v")
    degree = max(j for (_, j), _ in base.terms)
    expr = sp.expand(base.to_sympy(u, -(1 + u + v) / sp.Float(c)) * sp.Float(c) ** degree)
    poly = sp.Poly(expr, u, v)
    terms = tuple(((int(i), int(j)), float(value)) for (i, j), value in poly.terms() if abs(float(value)) > 0)
    return PlaneCurveQ(tuple(sorted(terms)), float(c))


@dataclass(frozen=True)
class _Branch:
    degree: int
    coefficients: tuple[Callable, ...]
    discriminant: Callable | None

    def rows(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        rows = np.empty((x.size, self.degree + 1), dtype=np.complex128)
        for k, func in enumerate(self.coefficients):
            rows[:, k] = np.broadcast_to(np.asarray(func(x, y), dtype=np.complex128), x.shape)
        return rows


@lru_cache(maxsize=64)
def _branch(q: PlaneCurveQ) -> _Branch:
    """Q0(z, (x - y) z - y), or Q(e^(-cx) z, -e^(-cy) (1 + z)) when c != 0, as a polynomial in z."""
    z, x, y = sp.symbols("z x y")
    if q.c == 0:
        expr = q.to_sympy(z, (x - y) * z - y)
    else:
        expr = q.to_sympy(sp.exp(-q.c * x) * z, -sp.exp(-q.c * y) * (1 + z))
    poly = sp.Poly(sp.expand(expr), z)
    if poly.degree() < 1:
        raise MalformedSpec("The curve does not determine z.")
    coefficients = tuple(sp.lambdify((x, y), coefficient, "numpy") for coefficient in poly.all_coeffs())
    discriminant = None
    if poly.degree() <= 3:
        discriminant = sp.lambdify((x, y), sp.discriminant(poly), "numpy")
    return _Branch(degree=poly.degree(), coefficients=coefficients, discriminant=discriminant)


def branch_roots(q: PlaneCurveQ, x, y) -> np.ndarray:
    """Roots z at every point; shape (points, degree)."""
    return batched_roots(_branch(q).rows(x, y))


def facet_label(w: float) -> str:
    """Facet of a frozen point from the real w: -w left of 0, in [0, 1], or right of 1."""
    apex = -float(np.real(w))
    if apex < 0:
        return FACET_LEFT
    if apex <= 1:
        return FACET_MIDDLE
    return FACET_RIGHT


def slope_of(z: complex) -> tuple[float, float]:
    w = -1 - z
    return (float(np.angle(-w)) / math.pi, float(np.angle(-1 / z)) / math.pi)


@dataclass(frozen=True)
class BurgersPoint:
    x: float
    y: float
    z: complex | None
    w: complex | None
    s: float
    t: float
    frozen: bool
    facet: str | None = None


def _upper_roots(roots: np.ndarray, delta: float) -> np.ndarray:
    finite = np.isfinite(roots)
    scale = np.where(finite, np.maximum(1.0, np.abs(roots)), 1.0)
    return finite & (roots.imag > delta * scale)


def _frozen_facet(q: PlaneCurveQ, roots: np.ndarray, x: float, y: float) -> str | None:
    real = [r.real for r in roots if np.isfinite(r) and abs(r.imag) <= 1e-8 * max(1.0, abs(r))]
    if not real:
        return None
    labels = [facet_label(-1 - r) for r in real]
    counts = {label: labels.count(label) for label in labels}
    best = max(counts.values())
    tied = [label for label, count in counts.items() if count == best]
    if len(tied) == 1:
        return tied[0]
    # closest to a collision: smallest |q'(r)|
    coefficients = _branch(q).rows(np.array([x]), np.array([y]))[0]
    derivative = np.polyder(coefficients)
    chosen = min(real, key=lambda r: abs(np.polyval(derivative, r)))
    return facet_label(-1 - chosen)


def _solve(q: PlaneCurveQ, x: float, y: float) -> BurgersPoint:
    delta = resolve("BURGERS_FROZEN_DELTA", None)
    roots = branch_roots(q, np.array([x]), np.array([y]))[0]
    upper = roots[_upper_roots(roots[None, :], delta)[0]]
    if len(upper) > 1:
        raise AmbiguousBranch(f"non-Harnack Q / ambiguous branch at ({x}, {y}): {len(upper)} upper roots")
    if len(upper) == 0:
        facet = _frozen_facet(q, roots, x, y)
        s, t = FACETS[facet] if facet else (math.nan, math.nan)
        return BurgersPoint(x, y, None, None, s, t, True, facet)
    z = complex(upper[0])
    s, t = slope_of(z)
    return BurgersPoint(x, y, z, -1 - z, s, t, False)


def burgers_solve(Q0, x: float, y: float) -> BurgersPoint:
    """Root of Q0(z, x z + y w) = 0, 1 + z + w = 0 with Im z > 0, or the frozen facet."""
    return _solve(curve(Q0, 0.0), float(x), float(y))


def burgers_solve_volume(Q, c: float, x: float, y: float) -> BurgersPoint:
    """As burgers_solve for Q(e^(-cx) z, e^(-cy) w) = 0."""
    if c == 0:
        raise MalformedSpec("burgers_solve_volume needs c != 0; use burgers_solve.")
    return _solve(curve(Q, c), float(x), float(y))


def burgers_residual(Q, x: float, y: float, step: float = 1e-5) -> complex:
    """z_x / z + w_y / w - c by central differences at a liquid point."""
    q = curve(Q)

    def root(px, py):
        point = _solve(q, px, py)
        if point.frozen:
            raise MalformedSpec(f"({px}, {py}) is not a liquid point.")
        return point.z

    z_x = (root(x + step, y) - root(x - step, y)) / (2 * step)
    w_y = -(root(x, y + step) - root(x, y - step)) / (2 * step)
    z0 = root(x, y)
    return z_x / z0 + w_y / (-1 - z0) - q.c


def curl_residual(Q, x: float, y: float, step: float = 1e-5) -> float:
    """s_y - t_x by central differences."""
    q = curve(Q)

    def slope(px, py):
        point = _solve(q, px, py)
        return point.s, point.t

    s_up, _ = slope(x, y + step)
    s_down, _ = slope(x, y - step)
    _, t_right = slope(x + step, y)
    _, t_left = slope(x - step, y)
    return (s_up - s_down) / (2 * step) - (t_right - t_left) / (2 * step)


# --- polygons ----------------------------------------------------------------------


def _direction_class(dx: float, dy: float, tol: float = 1e-9) -> tuple[int, float]:
    """(class, signed length) of an edge along e1, e2 or e3."""
    if abs(dy) <= tol:
        return 0, dx
    if abs(dx) <= tol:
        return 1, dy
    if abs(dx - dy) <= tol:
        return 2, -dx
    raise MalformedSpec(f"Edge ({dx}, {dy}) is not along a lattice direction.")


@dataclass(frozen=True)
class TangencyPolygon:
    """Closed polygon in lattice coordinates whose 3n edges follow the lattice directions cyclically."""

    vertices: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        if len(self.vertices) < 3 or len(self.vertices) % 3:
            raise MalformedSpec("A tangency polygon needs 3n vertices.")
        self.classes  # validates directions and order

    @property
    def degree(self) -> int:
        return len(self.vertices) // 3

    @property
    def edge_vectors(self) -> list[tuple[float, float]]:
        count = len(self.vertices)
        return [
            (self.vertices[(k + 1) % count][0] - self.vertices[k][0], self.vertices[(k + 1) % count][1] - self.vertices[k][1])
            for k in range(count)
        ]

    @cached_property
    def classes(self) -> tuple[int, ...]:
        vectors = self.edge_vectors
        known = {}
        for k, (dx, dy) in enumerate(vectors):
            if math.hypot(dx, dy) > 1e-9:
                known[k] = _direction_class(dx, dy)[0]
        if len(known) < 2:
            raise MalformedSpec("Degenerate polygon: fewer than two non-zero edges.")
        first, *rest = sorted(known)
        second = rest[0]
        gap = second - first
        step = None
        for candidate in (1, -1):
            if (known[first] + candidate * gap) % 3 == known[second]:
                step = candidate
        if step is None:
            raise MalformedSpec("Polygon edges do not follow the lattice directions in cyclic order.")
        classes = tuple((known[first] + step * (k - first)) % 3 for k in range(len(vectors)))
        for k, cls in known.items():
            if cls != classes[k]:
                raise MalformedSpec(f"Edge {k} breaks the cyclic order of lattice directions.")
        return classes

    @cached_property
    def path(self) -> PolygonPath:
        return PolygonPath(np.array(self.vertices + (self.vertices[0],), dtype=float), closed=True)

    def contains(self, x, y, radius: float = 1e-9) -> np.ndarray:
        points = np.column_stack([np.ravel(x), np.ravel(y)])
        inside = self.path.contains_points(points, radius=radius) | self.path.contains_points(points, radius=-radius)
        return inside.reshape(np.shape(x))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), max(xs), min(ys), max(ys))

    @property
    def area(self) -> float:
        count = len(self.vertices)
        return 0.5 * abs(
            sum(
                self.vertices[k][0] * self.vertices[(k + 1) % count][1]
                - self.vertices[(k + 1) % count][0] * self.vertices[k][1]
                for k in range(count)
            )
        )

    def to_json(self) -> dict:
        return {"version": 1, "name": self.name, "vertices": [list(v) for v in self.vertices]}


def hexagon_polygon(A: float, B: float, C: float) -> TangencyPolygon:
    """Sides A e2, -B e1, C e3, -A e2, B e1, -C e3, centred on the origin."""
    if min(A, B, C) < 0 or max(A, B, C) == 0:
        raise MalformedSpec("Hexagon sides must be non-negative and not all zero.")
    steps = [(0, A), (-B, 0), (-C, -C), (0, -A), (B, 0), (C, C)]
    points = [(0.0, 0.0)]
    for dx, dy in steps[:-1]:
        points.append((points[-1][0] + dx, points[-1][1] + dy))
    cx = sum(p[0] for p in points) / 6
    cy = sum(p[1] for p in points) / 6
    return TangencyPolygon(tuple((px - cx, py - cy) for px, py in points), name=f"hexagon-{A}x{B}x{C}")


def heart_polygon() -> TangencyPolygon:
    """Nine-sided region with one reflex corner; its frozen boundary is a cardioid."""
    lengths = (2, 1, 2, 2, 4, 2, 2, 1, 2)
    signs = (1, -1, 1, -1, 1, -1, 1, -1, 1)
    order = (1, 0, 2)
    points = [(0.0, 0.0)]
    for k in range(8):
        dx, dy = DIRECTIONS[order[k % 3]]
        scale = signs[k] * lengths[k]
        points.append((points[-1][0] + scale * dx, points[-1][1] + scale * dy))
    return TangencyPolygon(tuple(points), name="heart")


def polygon_from_json(doc: Mapping) -> TangencyPolygon:
    if "hexagon" in doc:
        A, B, C = (float(v) for v in doc["hexagon"])
        return hexagon_polygon(A, B, C)
    if doc.get("heart"):
        return heart_polygon()
    try:
        vertices = tuple((float(x), float(y)) for x, y in doc["vertices"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSpec(f"Malformed polygon document: {exc}") from exc
    return TangencyPolygon(vertices, name=str(doc.get("name", "")))


@dataclass(frozen=True)
class TangencyFit:
    curve: PlaneCurveQ
    residual: float
    singular_values: tuple[float, ...]


def _tangency_rows(polygon: TangencyPolygon) -> list[dict[tuple[int, int], float]]:
    """One linear condition on the coefficients per edge line.

    An e1 edge on the line y = y0 is the point (0, -y0) of Q, an e2 edge on
    x = x0 the point (-1, -x0), and an e3 edge on x - y = m the point at
    infinity (1 : m : 0).
    """
    n = polygon.degree
    monomials = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    rows = []
    for k, cls in enumerate(polygon.classes):
        px, py = polygon.vertices[k]
        if cls == 0:
            u, v = 0.0, -py
            rows.append({(i, j): (u**i) * v**j for i, j in monomials})
        elif cls == 1:
            u, v = -1.0, -px
            rows.append({(i, j): (u**i) * v**j for i, j in monomials})
        else:
            m = px - py
            rows.append({(i, j): (m**j if i + j == n else 0.0) for i, j in monomials})
    return rows


def fit_tangency_curve(polygon: TangencyPolygon) -> TangencyFit:
    """Least-squares curve of degree n whose dual is tangent to the 3n edge lines."""
    n = polygon.degree
    monomials = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    rows = _tangency_rows(polygon)
    matrix = np.array([[row[m] for m in monomials] for row in rows], dtype=float)
    _, singular, vt = np.linalg.svd(matrix)
    if singular[0] == 0:
        raise MalformedSpec("Degenerate polygon: no tangency conditions.")
    coefficients = vt[-1]
    residual = float(np.linalg.norm(matrix @ coefficients) / singular[0])
    terms = tuple((m, float(c)) for m, c in zip(monomials, coefficients) if abs(c) > 1e-12)
    fitted = PlaneCurveQ(terms).normalized()
    if all(i + j < 1 for (i, j), _ in fitted.terms) or all(i == 0 for (i, _), _ in fitted.terms):
        raise InfeasibleInput("degenerate or taut polygon: the fitted curve does not determine z")
    if residual > 1e-6:
        logger.warning("Tangency fit for %s has residual %.3g", polygon.name or "polygon", residual)
    logger.debug("Tangency fit of degree %d, singular values %s", n, np.array2string(singular, precision=3))
    return TangencyFit(curve=fitted, residual=residual, singular_values=tuple(float(s) for s in singular))


# --- slope fields ------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeField:
    """Values on the grid nodes (xs[i], ys[j]); arrays are indexed [j, i]."""

    xs: np.ndarray
    ys: np.ndarray
    s: np.ndarray
    t: np.ndarray
    z: np.ndarray
    liquid: np.ndarray
    inside: np.ndarray
    facet: np.ndarray  # index into left/middle/right, -1 where liquid or outside
    curve: PlaneCurveQ
    polygon: TangencyPolygon | None = None

    @property
    def spacing(self) -> tuple[float, float]:
        return (float(self.xs[1] - self.xs[0]), float(self.ys[1] - self.ys[0]))

    @property
    def frozen(self) -> np.ndarray:
        return self.inside & ~self.liquid


def _grid(polygon: TangencyPolygon, grid: int) -> tuple[np.ndarray, np.ndarray]:
    x0, x1, y0, y1 = polygon.bounds
    span = max(x1 - x0, y1 - y0)
    step = span / (grid - 1)
    xs = np.arange(x0, x1 + step / 2, step)
    ys = np.arange(y0, y1 + step / 2, step)
    return xs, ys


def slope_field(Q0, polygon: TangencyPolygon, grid: int = 101) -> SlopeField:
    """Burgers solution on a grid over ``polygon``.

    Frozen components of the grid take the facet that their liquid neighbours
    approach (the facet of 1 + Re z); components with no liquid neighbour vote
    with their own real roots.
    """
    q = curve(Q0)
    if grid < 3:
        raise MalformedSpec("Slope fields need at least 3 grid points per side.")
    delta = resolve("BURGERS_FROZEN_DELTA", None)
    xs, ys = _grid(polygon, grid)
    X, Y = np.meshgrid(xs, ys)
    inside = polygon.contains(X, Y)
    roots = branch_roots(q, X, Y).reshape(X.shape + (-1,))
    upper = _upper_roots(roots, delta)
    counts = upper.sum(axis=-1)
    ambiguous = inside & (counts > 1)
    if ambiguous.any():
        j, i = np.argwhere(ambiguous)[0]
        raise AmbiguousBranch(f"non-Harnack Q / ambiguous branch at ({xs[i]:.6g}, {ys[j]:.6g})")
    liquid = inside & (counts == 1)
    z = np.full(X.shape, np.nan + 0j)
    picked = np.where(upper, roots, 0)
    z[liquid] = picked[liquid].sum(axis=-1)
    s = np.full(X.shape, np.nan)
    t = np.full(X.shape, np.nan)
    s[liquid] = np.angle(1 + z[liquid]) / math.pi
    t[liquid] = np.angle(-1 / z[liquid]) / math.pi

    facet = np.full(X.shape, -1, dtype=int)
    frozen = inside & ~liquid
    labels, count = ndimage.label(frozen)
    for label in range(1, count + 1):
        mask = labels == label
        ring = ndimage.binary_dilation(mask) & liquid
        if ring.any():
            votes = [FACET_ORDER.index(facet_label(-1 - value)) for value in z[ring].real]
        else:
            votes = []
            for j, i in np.argwhere(mask):
                found = _frozen_facet(q, roots[j, i], float(xs[i]), float(ys[j]))
                if found is not None:
                    votes.append(FACET_ORDER.index(found))
        if not votes:
            continue
        code = int(np.bincount(votes, minlength=3).argmax())
        facet[mask] = code
        s[mask], t[mask] = FACETS[FACET_ORDER[code]]
    logger.debug(
        "Slope field %dx%d: %d liquid, %d frozen nodes, %d facets", len(xs), len(ys), liquid.sum(), frozen.sum(), count
    )
    return SlopeField(xs=xs, ys=ys, s=s, t=t, z=z, liquid=liquid, inside=inside, facet=facet, curve=q, polygon=polygon)


@dataclass(frozen=True)
class HeightSurface:
    xs: np.ndarray
    ys: np.ndarray
    h: np.ndarray  # [j, i], nan outside
    residual: float
    worst_at: tuple[float, float] | None

    def at(self, x: float, y: float) -> float:
        i = int(np.argmin(np.abs(self.xs - x)))
        j = int(np.argmin(np.abs(self.ys - y)))
        return float(self.h[j, i])


def height_from_slopefield(
    field: SlopeField, base_point: tuple[float, float] | None = None, *, base_value: float = 0.0, tol: float | None = None
) -> HeightSurface:
    """Integrate s dx + t dy over the grid by breadth-first search from ``base_point``.

    The residual is the largest trapezoid circulation of s dx + t dy around a
    grid cell whose corners are all liquid or all on one facet.
    """
    tol = resolve("HEIGHT_CURL_TOL", tol)
    dx, dy = field.spacing
    ny, nx = field.s.shape
    usable = field.inside & np.isfinite(field.s) & np.isfinite(field.t)
    if not usable.any():
        raise MalformedSpec("The slope field has no usable nodes.")
    if base_point is None:
        j0, i0 = np.argwhere(usable)[len(np.argwhere(usable)) // 2]
    else:
        i0 = int(np.argmin(np.abs(field.xs - base_point[0])))
        j0 = int(np.argmin(np.abs(field.ys - base_point[1])))
        if not usable[j0, i0]:
            raise MalformedSpec("The base point lies outside the slope field.")

    def increment(j, i, nj, ni):
        if nj == j:
            return (ni - i) * dx * (field.s[j, i] + field.s[nj, ni]) / 2
        return (nj - j) * dy * (field.t[j, i] + field.t[nj, ni]) / 2

    h = np.full((ny, nx), np.nan)
    h[j0, i0] = base_value
    queue = deque([(j0, i0)])
    while queue:
        j, i = queue.popleft()
        for nj, ni in ((j, i + 1), (j, i - 1), (j + 1, i), (j - 1, i)):
            if 0 <= nj < ny and 0 <= ni < nx and usable[nj, ni] and np.isnan(h[nj, ni]):
                h[nj, ni] = h[j, i] + increment(j, i, nj, ni)
                queue.append((nj, ni))
    unreached = usable & np.isnan(h)
    if unreached.any():
        logger.warning("%d slope-field nodes are not connected to the base point", int(unreached.sum()))

    worst, where = 0.0, None
    if nx > 1 and ny > 1:
        s, t = field.s, field.t
        circulation = (
            dx * (s[:-1, :-1] + s[:-1, 1:]) / 2
            + dy * (t[:-1, 1:] + t[1:, 1:]) / 2
            - dx * (s[1:, :-1] + s[1:, 1:]) / 2
            - dy * (t[:-1, :-1] + t[1:, :-1]) / 2
        )
        corners = (usable[:-1, :-1], usable[:-1, 1:], usable[1:, :-1], usable[1:, 1:])
        liquid = (field.liquid[:-1, :-1], field.liquid[:-1, 1:], field.liquid[1:, :-1], field.liquid[1:, 1:])
        facet = field.facet
        same_facet = (
            (facet[:-1, :-1] >= 0)
            & (facet[:-1, :-1] == facet[:-1, 1:])
            & (facet[:-1, :-1] == facet[1:, :-1])
            & (facet[:-1, :-1] == facet[1:, 1:])
        )
        # cells straddling a facet contact or the frozen boundary carry a kink, not curl
        smooth = np.logical_and.reduce(corners) & (np.logical_and.reduce(liquid) | same_facet)
        if smooth.any():
            magnitude = np.where(smooth, np.abs(circulation), 0.0)
            j, i = np.unravel_index(int(np.argmax(magnitude)), magnitude.shape)
            worst, where = float(magnitude[j, i]), (float(field.xs[i]), float(field.ys[j]))
    if worst > tol:
        raise ToleranceFailure(f"Slope field is not curl-free: residual {worst:.3g} at {where}")
    return HeightSurface(xs=field.xs, ys=field.ys, h=h, residual=worst, worst_at=where)


def surface_tension_functional(field: SlopeField) -> float:
    """Integral of sigma(s, t) over the polygon, one grid cell per inside node."""
    dx, dy = field.spacing
    usable = field.inside & np.isfinite(field.s)
    return float(np.sum(sigma(field.s[usable], field.t[usable])) * dx * dy)


@dataclass(frozen=True)
class FrozenBoundary:
    segments: tuple[np.ndarray, ...]

    @property
    def points(self) -> np.ndarray:
        if not self.segments:
            return np.zeros((0, 2))
        return np.concatenate(self.segments)

    @property
    def is_empty(self) -> bool:
        return not self.segments


def frozen_boundary(Q, polygon: TangencyPolygon, grid: int = 201, field: SlopeField | None = None) -> FrozenBoundary:
    """Zero level of the branch discriminant where liquid meets frozen, by marching squares."""
    field = field or slope_field(Q, polygon, grid)
    q = field.curve
    X, Y = np.meshgrid(field.xs, field.ys)
    branch = _branch(q)
    if branch.discriminant is not None:
        values = np.broadcast_to(np.real(np.asarray(branch.discriminant(X, Y), dtype=complex)), X.shape).copy()
        # quadratics and cubics with real coefficients are liquid exactly where the discriminant is negative
        level_field = values
    else:
        level_field = np.where(field.liquid, -1.0, 1.0)
    dx, dy = field.spacing
    region = polygon.contains(X, Y, radius=2 * max(dx, dy))
    masked = np.ma.array(level_field, mask=~region)
    generator = contourpy.contour_generator(x=field.xs, y=field.ys, z=masked)
    lines = generator.lines(0.0)
    # spurious discriminant branches lie deep inside frozen regions
    near = ndimage.binary_dilation(field.liquid, iterations=2) & region
    segments = []
    for line in lines:
        line = np.asarray(line, dtype=float)
        if len(line) < 2:
            continue
        i = np.clip(np.rint((line[:, 0] - field.xs[0]) / dx).astype(int), 0, len(field.xs) - 1)
        j = np.clip(np.rint((line[:, 1] - field.ys[0]) / dy).astype(int), 0, len(field.ys) - 1)
        keep = near[j, i]
        # split at dropped points
        start = None
        for k, flag in enumerate(list(keep) + [False]):
            if flag and start is None:
                start = k
            elif not flag and start is not None:
                if k - start >= 2:
                    segments.append(line[start:k])
                start = None
    logger.debug("Frozen boundary: %d segments", len(segments))
    return FrozenBoundary(tuple(segments))


def tangency_residuals(boundary: FrozenBoundary, polygon: TangencyPolygon) -> list[float]:
    """Per edge line, the smallest Euclidean distance from the traced curve to the line."""
    points = to_plane(boundary.points)
    if not len(points):
        return [math.inf] * len(polygon.vertices)
    corners = to_plane(np.array(polygon.vertices))
    count = len(corners)
    residuals = []
    for k in range(count):
        a, b = corners[k], corners[(k + 1) % count]
        direction = b - a
        length = np.hypot(*direction)
        if length == 0:
            residuals.append(0.0)
            continue
        normal = np.array([-direction[1], direction[0]]) / length
        residuals.append(float(np.min(np.abs((points - a) @ normal))))
    return residuals


def fit_circle(points) -> tuple[tuple[float, float], float]:
    """Algebraic least-squares circle through Euclidean points: (centre, radius)."""
    points = np.asarray(points, dtype=float)
    design = np.column_stack([2 * points[:, 0], 2 * points[:, 1], np.ones(len(points))])
    target = (points**2).sum(axis=1)
    (cx, cy, k), *_ = np.linalg.lstsq(design, target, rcond=None)
    return (float(cx), float(cy)), float(math.sqrt(k + cx * cx + cy * cy))


# --- discrete minimisation ---------------------------------------------------------


@dataclass(frozen=True)
class DiscreteMinimizer:
    vertices: np.ndarray  # (V, 2) lattice coordinates
    triangles: np.ndarray  # (T, 3)
    heights: np.ndarray
    boundary: np.ndarray  # bool per vertex
    slopes: np.ndarray  # (T, 2)
    objective: float
    history: tuple[float, ...]
    residual: float
    mesh_size: float

    @cached_property
    def triangulation(self) -> Triangulation:
        return Triangulation(self.vertices[:, 0], self.vertices[:, 1], self.triangles)

    def height_at(self, x, y):
        return LinearTriInterpolator(self.triangulation, self.heights)(x, y)

    def slope_at(self, x: float, y: float) -> tuple[float, float]:
        finder = self.triangulation.get_trifinder()
        index = int(finder(x, y))
        if index < 0:
            raise MalformedSpec(f"({x}, {y}) is outside the mesh.")
        return (float(self.slopes[index, 0]), float(self.slopes[index, 1]))


def _mesh(polygon: TangencyPolygon, mesh_size: float):
    """Lattice-aligned triangles: each cell split along its (1, 1) diagonal."""
    x0, x1, y0, y1 = polygon.bounds
    nx = int(round((x1 - x0) / mesh_size))
    ny = int(round((y1 - y0) / mesh_size))
    index = {}
    vertices = []
    triangles = []

    def vertex(i, j):
        key = (i, j)
        if key not in index:
            index[key] = len(vertices)
            vertices.append((x0 + i * mesh_size, y0 + j * mesh_size))
        return index[key]

    for i in range(nx):
        for j in range(ny):
            corners = {(a, b): (x0 + (i + a) * mesh_size, y0 + (j + b) * mesh_size) for a in (0, 1) for b in (0, 1)}
            for tri in (((0, 0), (1, 0), (1, 1)), ((0, 0), (1, 1), (0, 1))):
                points = np.array([corners[c] for c in tri])
                centroid = points.mean(axis=0)
                if not polygon.contains(np.array([centroid[0]]), np.array([centroid[1]]))[0]:
                    continue
                if not polygon.contains(points[:, 0], points[:, 1], radius=1e-7 * mesh_size).all():
                    continue
                triangles.append([vertex(i + a, j + b) for a, b in tri])
    if not triangles:
        raise MalformedSpec("The mesh is empty; use a smaller mesh size.")
    vertices = np.array(vertices)
    triangles = np.array(triangles, dtype=int)
    edge_count: dict[tuple[int, int], int] = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            edge_count[key] = edge_count.get(key, 0) + 1
    boundary = np.zeros(len(vertices), dtype=bool)
    for (a, b), count in edge_count.items():
        if count == 1:
            boundary[a] = boundary[b] = True
    return vertices, triangles, boundary


def minimize_surface_tension(
    polygon: TangencyPolygon,
    boundary_heights: Callable[[float, float], float] | Mapping[tuple[float, float], float],
    mesh_size: float,
    *,
    max_iter: int | None = None,
    tol: float | None = None,
) -> DiscreteMinimizer:
    """Piecewise-linear height minimising sum area * sigma(grad h) with the boundary fixed.

    A margin-maximising linear program checks that the boundary values extend
    to a Lipschitz function with slopes in the triangle and supplies the start;
    an interior-point trust-region method keeps every iterate feasible.
    """
    max_iter = int(resolve("MINIMIZER_MAX_ITER", max_iter))
    tol = float(resolve("MINIMIZER_TOL", tol))
    if mesh_size <= 0:
        raise MalformedSpec("The mesh size must be positive.")
    vertices, triangles, boundary = _mesh(polygon, mesh_size)
    n = len(vertices)
    S, T = _triangle_slopes(vertices, triangles)
    fixed = np.zeros(n)
    for k in np.flatnonzero(boundary):
        x, y = vertices[k]
        fixed[k] = _boundary_value(boundary_heights, x, y)
    free = np.flatnonzero(~boundary)
    bound = np.flatnonzero(boundary)
    S_free, S_fixed = S[:, free], S[:, bound]
    T_free, T_fixed = T[:, free], T[:, bound]
    s_offset = S_fixed @ fixed[bound]
    t_offset = T_fixed @ fixed[bound]

    # feasibility: maximise eps with s >= eps, t >= eps, 1 - s - t >= eps
    m = len(triangles)
    eps_col = sparse.csr_matrix(np.ones((m, 1)))
    A_ub = sparse.vstack(
        [
            sparse.hstack([-S_free, eps_col]),
            sparse.hstack([-T_free, eps_col]),
            sparse.hstack([S_free + T_free, eps_col]),
        ]
    ).tocsr()
    b_ub = np.concatenate([s_offset, t_offset, 1.0 - s_offset - t_offset])
    objective = np.zeros(len(free) + 1)
    objective[-1] = -1.0
    bounds = [(None, None)] * len(free) + [(None, 1.0 / 3.0)]
    lp = optimize.linprog(objective, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if lp.status != 0 or lp.x[-1] < -1e-9:
        raise InfeasibleInput("no spanning surface")
    start = lp.x[:-1]
    area = mesh_size * mesh_size / 2

    def slopes_of(h_free):
        return S_free @ h_free + s_offset, T_free @ h_free + t_offset

    def energy(h_free):
        s, t = slopes_of(h_free)
        return float(area * np.sum(sigma(np.clip(s, 0, 1), np.clip(t, 0, 1))))

    def gradient(h_free):
        s, t = slopes_of(h_free)
        ds, dt = sigma_gradient(s, t)
        return area * (S_free.T @ ds + T_free.T @ dt)

    history = [energy(start)]

    if len(free):
        constraint = optimize.LinearConstraint(
            sparse.vstack([S_free, T_free, S_free + T_free]).tocsr(),
            np.concatenate([-s_offset, -t_offset, np.full(m, -np.inf)]),
            np.concatenate([np.full(m, np.inf), np.full(m, np.inf), 1.0 - s_offset - t_offset]),
        )

        def record(xk, state=None):
            history.append(energy(xk))
            return False

        result = optimize.minimize(
            energy,
            start,
            jac=gradient,
            hess=optimize.BFGS(),
            method="trust-constr",
            constraints=[constraint],
            callback=record,
            options={"maxiter": max_iter, "gtol": tol, "xtol": tol * 1e-2, "verbose": 0},
        )
        solution = result.x
        if not result.success:
            logger.warning("Surface-tension minimisation stopped early: %s", result.message)
    else:
        solution = start
    heights = fixed.copy()
    heights[free] = solution
    s, t = slopes_of(solution)
    final = energy(solution)
    if final > history[0] + 1e-9 * max(1.0, abs(history[0])):
        logger.warning("Minimiser ended above its start (%.6g > %.6g)", final, history[0])
    # first-order residual at free vertices whose triangles are all strictly liquid
    strict = (s > 1e-6) & (t > 1e-6) & (1 - s - t > 1e-6)
    liquid_vertices = np.ones(n, dtype=bool)
    for k, tri in enumerate(triangles):
        if not strict[k]:
            liquid_vertices[tri] = False
    residual_vector = gradient(solution) / (mesh_size * mesh_size)
    mask = liquid_vertices[free]
    residual = float(np.max(np.abs(residual_vector[mask]))) if mask.any() else 0.0
    logger.debug("Minimiser: %d free vertices, objective %.8g, residual %.3g", len(free), final, residual)
    return DiscreteMinimizer(
        vertices=vertices,
        triangles=triangles,
        heights=heights,
        boundary=boundary,
        slopes=np.column_stack([s, t]),
        objective=final,
        history=tuple(history),
        residual=residual,
        mesh_size=mesh_size,
    )


def _triangle_slopes(vertices: np.ndarray, triangles: np.ndarray) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Sparse operators S, T with (s, t) on triangle k equal to ((S h)[k], (T h)[k])."""
    m, n = len(triangles), len(vertices)
    rows, cols, s_values, t_values = [], [], [], []
    for k, tri in enumerate(triangles):
        p = vertices[tri]
        # solve [p1 - p0; p2 - p0] (s, t) = (h1 - h0, h2 - h0)
        inverse = np.linalg.inv(np.array([p[1] - p[0], p[2] - p[0]]))
        weights = np.array([-inverse[:, 0] - inverse[:, 1], inverse[:, 0], inverse[:, 1]])
        for corner in range(3):
            rows.append(k)
            cols.append(tri[corner])
            s_values.append(weights[corner, 0])
            t_values.append(weights[corner, 1])
    S = sparse.csr_matrix((s_values, (rows, cols)), shape=(m, n))
    T = sparse.csr_matrix((t_values, (rows, cols)), shape=(m, n))
    return S, T


def _boundary_value(boundary_heights, x: float, y: float) -> float:
    if callable(boundary_heights):
        return float(boundary_heights(x, y))
    for (bx, by), value in boundary_heights.items():
        if abs(bx - x) < 1e-9 and abs(by - y) < 1e-9:
            return float(value)
    raise MalformedSpec(f"No boundary height given at ({x}, {y}).")


def polygon_boundary_heights(polygon: TangencyPolygon, slopes: Sequence[tuple[float, float]], base: float = 0.0):
    """Piecewise-linear boundary heights: edge k has the frozen slope ``slopes[k]`` along it."""
    if len(slopes) != len(polygon.vertices):
        raise MalformedSpec("One slope per polygon edge is required.")
    corner_heights = [base]
    vectors = polygon.edge_vectors
    for (dx, dy), (s, t) in zip(vectors[:-1], slopes[:-1]):
        corner_heights.append(corner_heights[-1] + s * dx + t * dy)
    dx, dy = vectors[-1]
    s, t = slopes[-1]
    closing = corner_heights[-1] + s * dx + t * dy - base
    if abs(closing) > 1e-9:
        raise InfeasibleInput("no spanning surface")
    count = len(polygon.vertices)

    def height(x: float, y: float) -> float:
        for k in range(count):
            ax, ay = polygon.vertices[k]
            bx, by = polygon.vertices[(k + 1) % count]
            ex, ey = bx - ax, by - ay
            length2 = ex * ex + ey * ey
            if length2 == 0:
                continue
            along = ((x - ax) * ex + (y - ay) * ey) / length2
            cross = abs((x - ax) * ey - (y - ay) * ex) / math.sqrt(length2)
            if -1e-9 <= along <= 1 + 1e-9 and cross < 1e-7:
                return corner_heights[k] + slopes[k][0] * (x - ax) + slopes[k][1] * (y - ay)
        raise MalformedSpec(f"({x}, {y}) is not on the polygon boundary.")

    return height


def hexagon_boundary_heights(polygon: TangencyPolygon):
    """Boundary of the hexagon: the e3 sides carry the height change, the others are level."""
    slopes = []
    for cls, (dx, dy) in zip(polygon.classes, polygon.edge_vectors):
        if cls == 0:
            slopes.append((0.0, 0.0) if dx <= 0 else (0.0, 1.0))
        elif cls == 1:
            slopes.append((1.0, 0.0) if dy >= 0 else (0.0, 0.0))
        else:
            slopes.append((1.0, 0.0) if dx <= 0 else (0.0, 1.0))
    return polygon_boundary_heights(polygon, slopes)


def linear_boundary_heights(s0: float, t0: float, base: float = 0.0):
    return lambda x, y: base + s0 * x + t0 * y


def facet_boundary_heights(field: SlopeField, base: float = 0.0):
    """Boundary heights whose slope along each edge is the facet of the frozen node nearest its first quarter point."""
    if field.polygon is None:
        raise MalformedSpec("The slope field carries no polygon.")
    frozen = np.argwhere(field.frozen & (field.facet >= 0))
    if not len(frozen):
        raise InfeasibleInput("The slope field has no frozen facets along the boundary.")
    nodes = np.column_stack([field.xs[frozen[:, 1]], field.ys[frozen[:, 0]]])
    slopes = []
    for (ax, ay), (dx, dy) in zip(field.polygon.vertices, field.polygon.edge_vectors):
        nearest = np.argmin(np.hypot(nodes[:, 0] - ax - dx / 4, nodes[:, 1] - ay - dy / 4))
        j, i = frozen[nearest]
        slopes.append((float(field.s[j, i]), float(field.t[j, i])))
    return polygon_boundary_heights(field.polygon, slopes, base)


def field_boundary_heights(surface: HeightSurface):
    """Boundary values read off a Burgers height surface (nearest grid node)."""
    return lambda x, y: surface.at(x, y)


__all__ = [
    "BurgersPoint",
    "DiscreteMinimizer",
    "FACETS",
    "FACET_ORDER",
    "FrozenBoundary",
    "HEXAGON_CURVE",
    "HeightSurface",
    "PlaneCurveQ",
    "SlopeField",
    "TangencyFit",
    "TangencyPolygon",
    "burgers_residual",
    "burgers_solve",
    "burgers_solve_volume",
    "curl_residual",
    "curve",
    "facet_boundary_heights",
    "facet_label",
    "field_boundary_heights",
    "fit_circle",
    "fit_tangency_curve",
    "from_plane",
    "frozen_boundary",
    "heart_polygon",
    "height_from_slopefield",
    "hexagon_boundary_heights",
    "hexagon_polygon",
    "linear_boundary_heights",
    "matching_volume_curve",
    "minimize_surface_tension",
    "polygon_boundary_heights",
    "polygon_from_json",
    "sigma",
    "sigma_gradient",
    "slope_field",
    "surface_tension_functional",
    "tangency_residuals",
    "to_plane",
]
