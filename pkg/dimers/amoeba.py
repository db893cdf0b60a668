"""Newton polygons, amoebas, the Ronkin function and phase classification.

Everything here works on fibres: for |z| = e^X fixed, the roots w_k(theta) of
w -> P(e^(X + i theta), w) trace the amoeba column over X.  Sorting their
log-moduli gives continuous functions l_1(theta) <= ... <= l_d(theta), and by
Jensen's formula

    R(X, Y) = jmin Y + (1/2pi) int [log|a_top(z)| + sum_k max(Y, l_k(theta))] dtheta,

where a_top is the coefficient of the highest power of w.  The integrand is
bounded and smooth away from the angles where some l_k crosses Y, which are
located first and used as panel breakpoints.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, ndimage, optimize, special
from scipy.spatial import ConvexHull, QhullError

from .conf import resolve
from .constants import PHASE_FROZEN, PHASE_GAS, PHASE_LIQUID
from .exceptions import InfeasibleInput, MalformedSpec, ToleranceFailure
from .polynomials import LaurentPoly2

logger = logging.getLogger(__name__)

FIBER_GRID = 512


# --- Newton polygon ----------------------------------------------------------------


@dataclass(frozen=True)
class NewtonPolygon:
    """Convex hull of the exponents, vertices counter-clockwise."""

    vertices: tuple[tuple[int, int], ...]

    @property
    def dimension(self) -> int:
        return min(len(self.vertices) - 1, 2)

    def _edges(self):
        count = len(self.vertices)
        for k in range(count):
            yield self.vertices[k], self.vertices[(k + 1) % count]

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        x, y = float(point[0]), float(point[1])
        if self.dimension == 0:
            vx, vy = self.vertices[0]
            return abs(x - vx) <= tol and abs(y - vy) <= tol
        if self.dimension == 1:
            (ax, ay), (bx, by) = self.vertices[0], self.vertices[-1]
            cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            dot = (x - ax) * (bx - ax) + (y - ay) * (by - ay)
            length2 = (bx - ax) ** 2 + (by - ay) ** 2
            return abs(cross) <= tol * math.sqrt(length2) and -tol <= dot <= length2 + tol
        return all((bx - ax) * (y - ay) - (by - ay) * (x - ax) >= -tol for (ax, ay), (bx, by) in self._edges())

    def on_boundary(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        if not self.contains(point, tol):
            return False
        if self.dimension < 2:
            return True
        x, y = float(point[0]), float(point[1])
        for (ax, ay), (bx, by) in self._edges():
            cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            if abs(cross) <= tol * math.hypot(bx - ax, by - ay):
                return True
        return False

    def lattice_points(self) -> list[tuple[int, int]]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return [
            (i, j)
            for i in range(min(xs), max(xs) + 1)
            for j in range(min(ys), max(ys) + 1)
            if self.contains((i, j))
        ]

    def interior_points(self) -> list[tuple[int, int]]:
        return [p for p in self.lattice_points() if not self.on_boundary(p)]

    def boundary_points(self) -> list[tuple[int, int]]:
        return [p for p in self.lattice_points() if self.on_boundary(p)]

    @property
    def area(self) -> float:
        if self.dimension < 2:
            return 0.0
        return 0.5 * sum(ax * by - bx * ay for (ax, ay), (bx, by) in self._edges())


def newton_polygon(poly: LaurentPoly2) -> NewtonPolygon:
    if poly.is_zero:
        raise MalformedSpec("The zero polynomial has no Newton polygon.")
    points = np.array(sorted(set(poly.support)), dtype=float)
    if len(points) >= 3:
        try:
            hull = ConvexHull(points)
            return NewtonPolygon(tuple((int(points[k, 0]), int(points[k, 1])) for k in hull.vertices))
        except QhullError:
            pass  # collinear support
    ordered = sorted(poly.support)
    if len(ordered) == 1:
        return NewtonPolygon((ordered[0],))
    return NewtonPolygon((ordered[0], ordered[-1]))


# --- fibres ------------------------------------------------------------------------


def batched_roots(rows: np.ndarray) -> np.ndarray:
    """Roots of many polynomials (highest coefficient first); lost roots are reported as inf."""
    count, width = rows.shape
    degree = width - 1
    out = np.full((count, max(degree, 0)), np.inf + 0j, dtype=np.complex128)
    if degree <= 0:
        return out
    scale = np.max(np.abs(rows), axis=1)
    regular = np.abs(rows[:, 0]) > 1e-13 * np.maximum(scale, 1e-300)
    if np.any(regular):
        chosen = rows[regular]
        companion = np.zeros((chosen.shape[0], degree, degree), dtype=np.complex128)
        companion[:, 0, :] = -chosen[:, 1:] / chosen[:, :1]
        if degree > 1:
            steps = np.arange(degree - 1)
            companion[:, steps + 1, steps] = 1.0
        out[regular] = np.linalg.eigvals(companion)
    for index in np.flatnonzero(~regular):
        if scale[index] == 0:
            continue
        roots = np.roots(rows[index])
        out[index, : roots.size] = roots
    return out


@dataclass(frozen=True)
class Fiber:
    """Sorted root log-moduli of w -> P(e^(X + i theta), w) on a grid of angles."""

    thetas: np.ndarray
    logs: np.ndarray  # shape (len(thetas), degree)
    top_log: np.ndarray  # log|a_top(z)|
    jmin: int

    @property
    def degree(self) -> int:
        return self.logs.shape[1]


def fiber(poly: LaurentPoly2, X: float, thetas: np.ndarray) -> Fiber:
    thetas = np.asarray(thetas, dtype=float)
    z = np.exp(X + 1j * thetas)
    rows, jmin = poly.fiber_coefficients(z)
    roots = batched_roots(rows)
    with np.errstate(divide="ignore"):
        logs = np.sort(np.log(np.abs(roots)), axis=1)
        top_log = np.log(np.abs(rows[:, 0]))
    return Fiber(thetas=thetas, logs=logs, top_log=top_log, jmin=jmin)


def _sorted_log(poly: LaurentPoly2, X: float, theta: float, k: int) -> float:
    return float(fiber(poly, X, np.array([theta])).logs[0, k])


def _angle_grid(size: int = FIBER_GRID) -> np.ndarray:
    return np.linspace(-math.pi, math.pi, size + 1)


def crossing_angles(poly: LaurentPoly2, X: float, Y: float, grid: int = FIBER_GRID) -> list[float]:
    """Angles at which some root of the fibre over |z| = e^X has modulus e^Y."""
    thetas = _angle_grid(grid)
    data = fiber(poly, X, thetas)
    crossings = []
    for k in range(data.degree):
        values = data.logs[:, k] - Y
        for j in range(len(thetas) - 1):
            left, right = values[j], values[j + 1]
            if not (np.isfinite(left) and np.isfinite(right)):
                continue
            if left == 0.0:
                crossings.append(float(thetas[j]))
            elif left * right < 0:
                root = optimize.brentq(
                    lambda theta: _sorted_log(poly, X, theta, k) - Y, thetas[j], thetas[j + 1], xtol=1e-13
                )
                crossings.append(float(root))
    return sorted(set(crossings))


# --- quadrature --------------------------------------------------------------------


def adaptive_gauss_legendre(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float,
    order: int,
    max_depth: int,
    breakpoints: Sequence[float] = (),
) -> float:
    """Gauss-Legendre on [a, b] split at ``breakpoints`` with dyadic refinement of every panel."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    span = b - a

    def panel(lo: float, hi: float) -> float:
        half = 0.5 * (hi - lo)
        return half * float(np.dot(weights, func(0.5 * (lo + hi) + half * nodes)))

    total, failed = 0.0, 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        stack = [(lo, hi, panel(lo, hi), 0)]
        while stack:
            left, right, whole, depth = stack.pop()
            mid = 0.5 * (left + right)
            first, second = panel(left, mid), panel(mid, right)
            if abs(first + second - whole) <= max(tol * (right - left) / span, 1e-15):
                total += first + second
            elif depth >= max_depth:
                total += first + second
                failed += 1
            else:
                stack.append((left, mid, first, depth + 1))
                stack.append((mid, right, second, depth + 1))
    if failed:
        raise ToleranceFailure(f"Quadrature missed tolerance {tol:g} on {failed} panels at depth {max_depth}.")
    return total


def _jensen(coefficients: dict[int, float], X: float) -> float:
    """(1/2pi) int log|sum c_i z^i| over |z| = e^X, exactly by Jensen's formula."""
    if not coefficients:
        return -math.inf
    low, high = min(coefficients), max(coefficients)
    dense = np.array([coefficients.get(i, 0.0) for i in range(high, low - 1, -1)], dtype=np.complex128)
    roots = np.roots(dense) if len(dense) > 1 else np.array([])
    value = math.log(abs(dense[0])) + low * X
    for root in roots:
        value += max(X, math.log(abs(root))) if root != 0 else X
    return value


# --- Ronkin function ---------------------------------------------------------------


def ronkin(
    poly: LaurentPoly2,
    X: float,
    Y: float,
    *,
    tol: float | None = None,
    max_depth: int | None = None,
    order: int | None = None,
) -> float:
    """(2pi)^-2 times the double integral of log|P| over the torus |z| = e^X, |w| = e^Y."""
    if poly.is_zero:
        raise MalformedSpec("The Ronkin function of the zero polynomial is undefined.")
    tol = resolve("RONKIN_TOL", tol)
    max_depth = resolve("RONKIN_MAX_DEPTH", max_depth)
    order = resolve("GAUSS_ORDER", order)
    jmin, jmax = poly.w_range()
    if jmin == jmax:
        return jmin * Y + _jensen({i: float(c) for (i, _), c in poly.terms}, X)

    def integrand(thetas: np.ndarray) -> np.ndarray:
        data = fiber(poly, X, thetas)
        return data.top_log + np.sum(np.maximum(Y, data.logs), axis=1)

    breaks = crossing_angles(poly, X, Y)
    value = adaptive_gauss_legendre(
        integrand, -math.pi, math.pi, tol=tol, order=order, max_depth=max_depth, breakpoints=breaks
    )
    return jmin * Y + value / (2 * math.pi)


def _count_average(poly: LaurentPoly2, X: float, Y: float) -> float:
    """jmin + average over theta of the number of fibre roots inside |w| = e^Y."""
    jmin, jmax = poly.w_range()
    if jmin == jmax:
        return float(jmin)
    breaks = [-math.pi, *(p for p in crossing_angles(poly, X, Y) if -math.pi < p < math.pi), math.pi]
    mids = np.array([0.5 * (lo + hi) for lo, hi in zip(breaks[:-1], breaks[1:])])
    lengths = np.diff(breaks)
    counts = np.sum(fiber(poly, X, mids).logs < Y, axis=1)
    return jmin + float(np.dot(lengths, counts)) / (2 * math.pi)


def ronkin_gradient(poly: LaurentPoly2, X: float, Y: float) -> tuple[float, float]:
    """(dR/dX, dR/dY) by counting fibre roots inside the circles; a lattice point off the amoeba."""
    if poly.is_zero:
        raise MalformedSpec("The Ronkin function of the zero polynomial is undefined.")
    t = _count_average(poly, X, Y)
    s = _count_average(poly.swapped(), Y, X)
    return (s, t)


def ronkin_gradient_differences(poly: LaurentPoly2, X: float, Y: float, step: float = 1e-4) -> tuple[float, float]:
    s = (ronkin(poly, X + step, Y) - ronkin(poly, X - step, Y)) / (2 * step)
    t = (ronkin(poly, X, Y + step) - ronkin(poly, X, Y - step)) / (2 * step)
    return (s, t)


def free_energy(poly: LaurentPoly2, sites: int = 1, **options) -> float:
    """R(0, 0) per fundamental domain, or per vertex when ``sites`` is the domain's vertex count."""
    if sites < 1:
        raise MalformedSpec("The number of sites must be positive.")
    return ronkin(poly, 0.0, 0.0, **options) / sites


# --- Lobachevsky and the honeycomb -------------------------------------------------


LOBACHEVSKY_TERMS = 200_000


def lobachevsky(theta, method: str = "series"):
    """L(theta) = -int_0^theta log(2 sin t) dt.

    ``"dilog"`` evaluates (1/2) Im Li2(e^(2 i theta)) through scipy's Spence
    function and accepts arrays; the other methods take one angle.
    """
    if method == "dilog":
        values = np.asarray(theta, dtype=float)
        result = 0.5 * np.imag(special.spence(1.0 - np.exp(2j * values)))
        return float(result) if result.ndim == 0 else result
    theta = float(theta)
    if method == "series":
        k = np.arange(1, LOBACHEVSKY_TERMS + 1, dtype=float)
        return 0.5 * float(np.sum(np.sin(2 * k * theta) / (k * k)))
    if method == "quad":
        reduced = math.fmod(theta, math.pi)
        points = [p for p in (0.0, math.pi) if min(0.0, reduced) < p < max(0.0, reduced)]
        value, _ = integrate.quad(
            lambda t: -math.log(abs(2 * math.sin(t))) if math.sin(t) else 0.0,
            0.0,
            reduced,
            points=points or None,
            limit=200,
        )
        return value
    raise MalformedSpec(f"Unknown Lobachevsky method {method!r}.")


def triangle_angles(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Angles opposite the sides a, b, c; degenerate (pi at the longest side) if no triangle exists."""
    a, b, c = float(a), float(b), float(c)
    if min(a, b, c) <= 0:
        raise MalformedSpec("Triangle sides must be positive.")
    sides = (a, b, c)
    longest = max(range(3), key=lambda k: sides[k])
    if sides[longest] >= sum(sides) - sides[longest]:
        return tuple(math.pi if k == longest else 0.0 for k in range(3))

    def angle(opposite: float, x: float, y: float) -> float:
        return math.acos(min(1.0, max(-1.0, (x * x + y * y - opposite * opposite) / (2 * x * y))))

    return (angle(a, b, c), angle(b, a, c), angle(c, a, b))


def honeycomb_edge_probabilities(a: float, b: float, c: float) -> tuple[float, float, float]:
    return tuple(theta / math.pi for theta in triangle_angles(a, b, c))


def honeycomb_slope(X: float, Y: float) -> tuple[float, float]:
    """Slope (theta_b / pi, theta_c / pi) of the honeycomb with weights 1, e^X, e^Y."""
    _, theta_b, theta_c = triangle_angles(1.0, math.exp(X), math.exp(Y))
    return (theta_b / math.pi, theta_c / math.pi)


def surface_tension_honeycomb(s: float, t: float, method: str = "series") -> float:
    if s < -1e-12 or t < -1e-12 or s + t > 1 + 1e-12:
        raise InfeasibleInput("slope infeasible")
    u = 1.0 - s - t
    return -(lobachevsky(math.pi * s, method) + lobachevsky(math.pi * t, method) + lobachevsky(math.pi * u, method)) / math.pi


@dataclass(frozen=True)
class LegendrePair:
    s: float
    t: float
    sigma: float


def legendre_pair(poly: LaurentPoly2, X: float, Y: float, method: str = "count") -> LegendrePair:
    """Slope and surface tension dual to (X, Y): sigma(s, t) = sX + tY - R(X, Y)."""
    if method == "count":
        s, t = ronkin_gradient(poly, X, Y)
    elif method == "differences":
        s, t = ronkin_gradient_differences(poly, X, Y)
    else:
        raise MalformedSpec(f"Unknown gradient method {method!r}.")
    return LegendrePair(s=s, t=t, sigma=s * X + t * Y - ronkin(poly, X, Y))


def dual_point(poly: LaurentPoly2, s: float, t: float, start: tuple[float, float] = (0.0, 0.0)) -> tuple[float, float]:
    """(X, Y) with grad R = (s, t), minimising R - sX - tY."""

    def objective(point):
        X, Y = point
        gs, gt = ronkin_gradient(poly, X, Y)
        return ronkin(poly, X, Y) - s * X - t * Y, np.array([gs - s, gt - t])

    result = optimize.minimize(objective, np.array(start, dtype=float), jac=True, method="BFGS", options={"gtol": 1e-8})
    gs, gt = ronkin_gradient(poly, *result.x)
    if abs(gs - s) > 1e-5 or abs(gt - t) > 1e-5:
        raise ToleranceFailure(f"No dual point found for slope ({s}, {t}).")
    return (float(result.x[0]), float(result.x[1]))


def surface_tension(poly: LaurentPoly2, s: float, t: float) -> float:
    """sigma(s, t) as the Legendre dual of the Ronkin function."""
    polygon = newton_polygon(poly)
    if not polygon.contains((s, t)) or polygon.on_boundary((s, t), tol=1e-12):
        raise InfeasibleInput("slope infeasible")
    X, Y = dual_point(poly, s, t)
    return s * X + t * Y - ronkin(poly, X, Y)


# --- amoeba membership and rasters -------------------------------------------------


def _column_intervals(poly: LaurentPoly2, X: float, thetas: np.ndarray, refine: bool) -> list[tuple[float, float]]:
    data = fiber(poly, X, thetas)
    intervals = []
    for k in range(data.degree):
        column = data.logs[:, k]
        low, high = float(np.min(column)), float(np.max(column))
        if refine and np.isfinite(low) and np.isfinite(high):
            step = thetas[1] - thetas[0]
            for sign, index in ((1.0, int(np.argmin(column))), (-1.0, int(np.argmax(column)))):
                centre = float(thetas[index])
                found = optimize.minimize_scalar(
                    lambda theta: sign * _sorted_log(poly, X, theta, k),
                    bounds=(centre - step, centre + step),
                    method="bounded",
                    options={"xatol": 1e-12},
                )
                if sign > 0:
                    low = min(low, float(found.fun))
                else:
                    high = max(high, -float(found.fun))
        intervals.append((low, high))
    return intervals


def _monomial_only_in(poly: LaurentPoly2) -> str | None:
    if poly.is_monomial:
        return "both"
    jmin, jmax = poly.w_range()
    if jmin == jmax:
        return "w"
    return None


def amoeba_member(poly: LaurentPoly2, X: float, Y: float, tol: float | None = None, grid: int = FIBER_GRID) -> bool:
    """Whether the torus |z| = e^X, |w| = e^Y meets the zero set, up to ``tol`` in log-modulus."""
    tol = resolve("AMOEBA_TOL", tol)
    degenerate = _monomial_only_in(poly)
    if degenerate == "both":
        return False
    if degenerate == "w":
        coefficients = {i: float(c) for (i, _), c in poly.terms}
        low = min(coefficients)
        dense = np.array([coefficients.get(i, 0.0) for i in range(max(coefficients), low - 1, -1)])
        return any(abs(math.log(abs(r)) - X) <= tol for r in np.roots(dense) if r != 0)
    for low, high in _column_intervals(poly, X, _angle_grid(grid), refine=True):
        if low - tol <= Y <= high + tol:
            return True
    return False


@dataclass(frozen=True)
class ComplementComponent:
    label: int
    bounded: bool
    cells: int
    point: tuple[float, float]
    lattice_point: tuple[int, int]
    gradient: tuple[float, float]


@dataclass(frozen=True)
class AmoebaRaster:
    xs: np.ndarray
    ys: np.ndarray
    member: np.ndarray  # [ix, iy]
    labels: np.ndarray
    components: tuple[ComplementComponent, ...] = field(default=())

    @property
    def bounded(self) -> list[ComplementComponent]:
        return [c for c in self.components if c.bounded]

    @property
    def unbounded(self) -> list[ComplementComponent]:
        return [c for c in self.components if not c.bounded]


def auto_window(poly: LaurentPoly2, minimum: float | None = None) -> float:
    """Half-width of a square window holding the bounded features of the amoeba."""
    minimum = resolve("AMOEBA_WINDOW", minimum)
    logs = [math.log(abs(float(c))) for _, c in poly.terms]
    return max(float(minimum), 2.0 + max(logs) - min(logs))


def _mark(member: np.ndarray, axis_values: np.ndarray, index: int, intervals, along_y: bool) -> None:
    step = axis_values[1] - axis_values[0]
    start = axis_values[0] - step / 2
    size = len(axis_values)
    for low, high in intervals:
        if high < start or low > start + size * step:
            continue
        first = max(0, int(math.floor((low - start) / step))) if np.isfinite(low) else 0
        last = min(size - 1, int(math.floor((high - start) / step))) if np.isfinite(high) else size - 1
        if first > last:
            continue
        if along_y:
            member[index, first : last + 1] = True
        else:
            member[first : last + 1, index] = True


def amoeba_raster(
    poly: LaurentPoly2,
    window: float | tuple[float, float, float, float] | None = None,
    size: int | None = None,
    *,
    angles: int | None = None,
) -> AmoebaRaster:
    """Rasterise the amoeba and label the connected components of its complement.

    Columns are filled from the w-fibres and rows from the z-fibres, so thin
    tentacles of either orientation close off neighbouring components.
    """
    if poly.is_zero or poly.is_monomial:
        raise MalformedSpec("The amoeba of a monomial is empty.")
    size = int(resolve("AMOEBA_RASTER", size))
    if window is None:
        window = auto_window(poly)
    if isinstance(window, (int, float)):
        x0, x1, y0, y1 = -window, window, -window, window
    else:
        x0, x1, y0, y1 = window
    xs = x0 + (np.arange(size) + 0.5) * (x1 - x0) / size
    ys = y0 + (np.arange(size) + 0.5) * (y1 - y0) / size
    thetas = _angle_grid(angles or max(FIBER_GRID, 2 * size))
    member = np.zeros((size, size), dtype=bool)
    jmin, jmax = poly.w_range()
    imin, imax = poly.z_range()
    if jmax > jmin:
        for ix, X in enumerate(xs):
            _mark(member, ys, ix, _column_intervals(poly, float(X), thetas, refine=False), along_y=True)
    if imax > imin:
        swapped = poly.swapped()
        for iy, Y in enumerate(ys):
            _mark(member, xs, iy, _column_intervals(swapped, float(Y), thetas, refine=False), along_y=False)
    labels, count = ndimage.label(~member)
    distance = ndimage.distance_transform_edt(~member)
    edge_labels = set(np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))) - {0}
    components = []
    for label in range(1, count + 1):
        mask = labels == label
        ix, iy = np.unravel_index(np.argmax(np.where(mask, distance, -1.0)), mask.shape)
        point = (float(xs[ix]), float(ys[iy]))
        gradient = ronkin_gradient(poly, *point)
        components.append(
            ComplementComponent(
                label=label,
                bounded=label not in edge_labels,
                cells=int(mask.sum()),
                point=point,
                lattice_point=(int(round(gradient[0])), int(round(gradient[1]))),
                gradient=gradient,
            )
        )
    logger.debug("Amoeba raster %dx%d: %d complement components", size, size, count)
    return AmoebaRaster(xs=xs, ys=ys, member=member, labels=labels, components=tuple(components))


# --- phases ------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseLabel:
    phase: str
    slope: tuple[float, float]
    point: tuple[float, float] | None


def phase_at_point(poly: LaurentPoly2, X: float, Y: float, tol: float | None = None) -> PhaseLabel:
    polygon = newton_polygon(poly)
    if amoeba_member(poly, X, Y, tol):
        return PhaseLabel(PHASE_LIQUID, ronkin_gradient(poly, X, Y), (X, Y))
    s, t = ronkin_gradient(poly, X, Y)
    lattice = (round(s), round(t))
    phase = PHASE_FROZEN if polygon.on_boundary(lattice) else PHASE_GAS
    return PhaseLabel(phase, (float(lattice[0]), float(lattice[1])), (X, Y))


def phase_classify(
    poly: LaurentPoly2,
    slope: tuple[float, float] | None = None,
    point: tuple[float, float] | None = None,
    *,
    raster: AmoebaRaster | None = None,
) -> PhaseLabel:
    """Frozen, gas or liquid for a slope in the Newton polygon, or for a point of the plane.

    Boundary slopes are frozen.  An interior lattice slope is gas exactly when an
    observed bounded complement component carries it.
    """
    if (slope is None) == (point is None):
        raise MalformedSpec("Give exactly one of slope or point.")
    if point is not None:
        return phase_at_point(poly, *point)
    polygon = newton_polygon(poly)
    s, t = float(slope[0]), float(slope[1])
    if not polygon.contains((s, t)):
        raise InfeasibleInput("no invariant measure with this slope")
    if polygon.on_boundary((s, t)):
        return PhaseLabel(PHASE_FROZEN, (s, t), None)
    if float(s).is_integer() and float(t).is_integer():
        raster = raster or amoeba_raster(poly)
        for component in raster.bounded:
            if component.lattice_point == (int(s), int(t)):
                return PhaseLabel(PHASE_GAS, (s, t), component.point)
    return PhaseLabel(PHASE_LIQUID, (s, t), dual_point(poly, s, t))


@dataclass(frozen=True)
class SpectralReport:
    polynomial: LaurentPoly2
    polygon: NewtonPolygon
    raster: AmoebaRaster
    phases: dict[tuple[int, int], str]


def spectral_report(poly: LaurentPoly2, window=None, size: int | None = None) -> SpectralReport:
    polygon = newton_polygon(poly)
    raster = amoeba_raster(poly, window, size)
    phases = {}
    for point in polygon.lattice_points():
        if polygon.on_boundary(point):
            phases[point] = PHASE_FROZEN
        elif any(c.lattice_point == point for c in raster.bounded):
            phases[point] = PHASE_GAS
        else:
            phases[point] = PHASE_LIQUID
    return SpectralReport(polynomial=poly, polygon=polygon, raster=raster, phases=phases)


# --- Harnack property --------------------------------------------------------------


def torus_solution_count(poly: LaurentPoly2, X: float, Y: float, grid: int = 2048) -> int:
    """Number of zeros of P on the torus |z| = e^X, |w| = e^Y (transversal crossings)."""
    thetas = _angle_grid(grid)
    data = fiber(poly, X, thetas)
    total = 0
    for k in range(data.degree):
        values = data.logs[:, k] - Y
        finite = np.isfinite(values)
        signs = np.sign(values[finite])
        total += int(np.count_nonzero(signs[:-1] * signs[1:] < 0))
    return total


@dataclass(frozen=True)
class HarnackReport:
    samples: int
    max_count: int
    violations: tuple[tuple[float, float, int], ...]
    failures: int

    @property
    def harnack(self) -> bool:
        return not self.violations


def harnack_check(
    poly: LaurentPoly2,
    samples: int = 500,
    seed: int | None = None,
    window: float = 3.0,
) -> HarnackReport:
    """Sample amoeba points from random fibre roots and count torus solutions over each."""
    seed = resolve("SEED", seed)
    rng = np.random.default_rng(seed)
    jmin, jmax = poly.w_range()
    if jmax == jmin:
        raise MalformedSpec("Harnack checks need a polynomial of positive degree in w.")
    violations, failures, worst, taken = [], 0, 0, 0
    while taken < samples:
        X = float(rng.uniform(-window, window))
        theta = float(rng.uniform(-math.pi, math.pi))
        logs = fiber(poly, X, np.array([theta])).logs[0]
        logs = logs[np.isfinite(logs)]
        if logs.size == 0:
            failures += 1
            if failures > 10 * samples:
                raise ToleranceFailure("No finite fibre roots found while sampling the amoeba.")
            continue
        Y = float(logs[rng.integers(logs.size)])
        count = torus_solution_count(poly, X, Y)
        if count == 0:
            failures += 1
        worst = max(worst, count)
        if count > 2:
            violations.append((X, Y, count))
        taken += 1
    if violations:
        logger.warning("Harnack check: %d of %d sampled points have more than 2 preimages", len(violations), samples)
    return HarnackReport(samples=samples, max_count=worst, violations=tuple(violations), failures=failures)


__all__ = [
    "AmoebaRaster",
    "ComplementComponent",
    "Fiber",
    "HarnackReport",
    "LegendrePair",
    "NewtonPolygon",
    "PhaseLabel",
    "SpectralReport",
    "adaptive_gauss_legendre",
    "amoeba_member",
    "amoeba_raster",
    "auto_window",
    "batched_roots",
    "crossing_angles",
    "dual_point",
    "fiber",
    "free_energy",
    "harnack_check",
    "honeycomb_edge_probabilities",
    "honeycomb_slope",
    "legendre_pair",
    "lobachevsky",
    "newton_polygon",
    "phase_at_point",
    "phase_classify",
    "ronkin",
    "ronkin_gradient",
    "ronkin_gradient_differences",
    "spectral_report",
    "surface_tension",
    "surface_tension_honeycomb",
    "torus_solution_count",
    "triangle_angles",
]
