"""Infinite-volume kernels, column variances and Gaussian free field comparisons.

Coordinates follow the honeycomb convention in which the white vertex
``w(0, 0)`` sits at the origin and ``b(x, y)`` at ``e1 + x (e3 - e1) + y (e1 - e2)``
for the cube roots of unity ``e1, e2, e3``.  With ``z = e^(i alpha)`` the
``w`` contour integral is done in closed form, leaving one integral in alpha
whose integrand is smooth on each side of the two points where |a + b z| = c.

Heights are measured in dimer units with the symmetric base flow 1/3 on
every edge (the unscaled values of ``heights.HeightFunction``).
"""
from __future__ import annotations

import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .conf import resolve
from .exceptions import InfeasibleInput, MalformedSpec, ToleranceFailure
from .graphs import BipartiteGraph
from .heights import height_function
from .sampler import METHOD_EXACT, SampleBatch, sample_batch

logger = logging.getLogger(__name__)

OMEGA = cmath.exp(2j * math.pi / 3)


def _check_weights(a: float, b: float, c: float) -> tuple[float, float, float]:
    a, b, c = float(a), float(b), float(c)
    if min(a, b, c) <= 0:
        raise MalformedSpec("Edge weights must be positive.")
    return a, b, c


def opposite_angle(a: float, b: float, c: float) -> float | None:
    """Angle opposite ``c`` in the triangle with sides a, b, c, or None when the triangle is degenerate."""
    if a + b <= c or a + c <= b or b + c <= a:
        return None
    return math.acos((a * a + b * b - c * c) / (2 * a * b))


def _kinv_integrand(alpha: np.ndarray, x: int, y: int, a: float, b: float, c: float) -> np.ndarray:
    A = a + b * np.exp(1j * alpha)
    phase = np.exp(-1j * y * alpha)
    if x <= 0:
        inside = np.abs(A) > c
        value = np.where(inside, (-c / A) ** (-x) / A, 0.0)
    else:
        inside = np.abs(A) < c
        value = np.where(inside, (-A / c) ** (x - 1) / c, 0.0)
    return value * phase


def _composite(func, pieces: Sequence[tuple[float, float]], panels: int, nodes, weights) -> complex:
    total = 0j
    for lo, hi in pieces:
        edges = np.linspace(lo, hi, panels + 1)
        mids = (edges[1:] + edges[:-1]) / 2
        halves = (edges[1:] - edges[:-1]) / 2
        points = (mids[:, None] + halves[:, None] * nodes[None, :]).ravel()
        scale = (halves[:, None] * weights[None, :]).ravel()
        total += np.sum(func(points) * scale)
    return total


def kinv_infinite(
    x: int,
    y: int,
    a: float = 1.0,
    b: float = 1.0,
    c: float = 1.0,
    *,
    tol: float | None = None,
    max_grid: int | None = None,
    order: int | None = None,
) -> float:
    """K^{-1}(w(0, 0), b(x, y)) on the infinite honeycomb with weights a, b, c.

    Panels are doubled until two successive values agree to ``tol``; more
    than ``max_grid`` quadrature nodes raises ToleranceFailure.
    """
    tol = float(resolve("KINV_TOL", tol))
    max_grid = int(resolve("KINV_MAX_GRID", max_grid))
    order = int(resolve("GAUSS_ORDER", order))
    a, b, c = _check_weights(a, b, c)
    x, y = int(x), int(y)
    theta_c = opposite_angle(a, b, c)
    if theta_c is None:
        logger.debug("Weights (%g, %g, %g) are frozen; integrand has no jump", a, b, c)
        pieces = [(-math.pi, math.pi)]
    else:
        edge = math.pi - theta_c
        pieces = [(-math.pi, -edge), (-edge, edge), (edge, math.pi)]
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def func(alpha):
        return _kinv_integrand(alpha, x, y, a, b, c)

    panels = 1
    previous = _composite(func, pieces, panels, nodes, weights)
    while True:
        panels *= 2
        if panels * order * len(pieces) > max_grid:
            raise ToleranceFailure(f"K^-1({x}, {y}) did not converge to {tol:g} within {max_grid} nodes")
        current = _composite(func, pieces, panels, nodes, weights)
        if abs(current - previous) < tol * 2 * math.pi:
            break
        previous = current
    value = current / (2 * math.pi)
    if abs(value.imag) > 1e3 * tol:
        logger.warning("K^-1(%d, %d) has imaginary part %.3g", x, y, value.imag)
    logger.debug("K^-1(%d, %d) = %.12g with %d panels", x, y, value.real, panels)
    return float(value.real)


def edge_probability_infinite(a: float, b: float, c: float) -> float:
    """Probability of an a-edge, a K^{-1}(w(0, 0), b(0, 0)); 1 or 0 in the frozen regimes."""
    a, b, c = _check_weights(a, b, c)
    if a >= b + c:
        return 1.0
    if b >= a + c or c >= a + b:
        return 0.0
    return opposite_angle(b, c, a) / math.pi


def kinv_asymptotic(x: int, y: int, scale: float = 1.0) -> float:
    """Leading term of K^{-1}(w(0, 0), b(x, y)) for uniform weights, from the two torus zeros of 1 + z + w.

    Coordinates are those of kinv_infinite, b(x, y) at e1 + x (e3 - e1) + y (e1 - e2),
    where the Fourier weight of b(x, y) is z^-y w^x.  At the zero
    (z, w) = (e^(2 pi i / 3), e^(4 pi i / 3)) that weight is e^(-2 pi i (x + y) / 3),
    so the value is
    -scale * Re(e^(-2 pi i (x + y) / 3) / (pi (e^(i pi / 6) x + e^(5 i pi / 6) y))).
    The form scale * Re(e^(2 pi i (x - y) / 3) / (pi (...))) belongs to a labelling
    of the black vertices that starts from a different neighbour of w(0, 0); the
    two differ by a gauge phase and share |K^{-1}| and its 1/r decay.
    """
    if x == 0 and y == 0:
        raise MalformedSpec("The asymptotic form is not defined at the origin.")
    denominator = math.pi * (cmath.exp(1j * math.pi / 6) * x + cmath.exp(5j * math.pi / 6) * y)
    return -scale * (cmath.exp(-2j * math.pi * (x + y) / 3) / denominator).real


def torus_kinv(n: int, a: float, b: float, c: float, x: int, y: int, twist: tuple[int, int] = (-1, -1)) -> float:
    """Discrete Fourier sum over z^n = twist[0], w^n = twist[1] of z^-y w^x / (a + b z + c w) / n^2."""
    if n < 1:
        raise MalformedSpec("The torus size must be positive.")
    if any(t not in (1, -1) for t in twist):
        raise MalformedSpec("Twists are +1 or -1.")
    a, b, c = _check_weights(a, b, c)
    shift = [0.5 if t == -1 else 0.0 for t in twist]
    z = np.exp(2j * math.pi * (np.arange(n) + shift[0]) / n)[:, None]
    w = np.exp(2j * math.pi * (np.arange(n) + shift[1]) / n)[None, :]
    P = a + b * z + c * w
    if np.min(np.abs(P)) < 1e-12:
        raise InfeasibleInput("singular torus Kasteleyn matrix for this twist")
    value = np.sum(z ** (-y) * w**x / P) / (n * n)
    return float(value.real)


# --- column process ----------------------------------------------------------------


@dataclass(frozen=True)
class ColumnKernel:
    """a_0 = theta/pi and a_k = -sin(k theta) / (pi k): the a-edges of one column are determinantal."""

    theta_a: float
    entries: np.ndarray  # a_0 .. a_k

    def entry(self, k: int) -> float:
        k = abs(k)
        if k < len(self.entries):
            return float(self.entries[k])
        return float(_column_entries(self.theta_a, k)[k])

    def diagonal(self, k: int) -> float:
        """K^{-1}(w(0, 0), b(k, k)) at a = 1: a_k times the gauge sign (-1)^(k + 1) off the origin."""
        if k == 0:
            return self.entry(0)
        return (-1) ** (abs(k) + 1) * self.entry(k)

    def matrix(self, size: int | None = None) -> np.ndarray:
        size = len(self.entries) if size is None else size
        column = self.entries[:size] if size <= len(self.entries) else _column_entries(self.theta_a, size - 1)
        return toeplitz(column)


def _column_entries(theta: float, k: int) -> np.ndarray:
    j = np.arange(1, k + 1)
    return np.concatenate([[theta / math.pi], -np.sin(j * theta) / (math.pi * j)])


def column_kernel(theta_a: float, k: int) -> ColumnKernel:
    if not 0 <= theta_a <= math.pi:
        raise MalformedSpec("theta_a must lie in [0, pi].")
    if k < 0:
        raise MalformedSpec("k must be non-negative.")
    return ColumnKernel(theta_a=float(theta_a), entries=_column_entries(float(theta_a), int(k)))


def column_probability(theta_a: float, offsets: Iterable[int]) -> float:
    """Probability that the a-edges at the given column offsets all occur.

    The determinant is taken over the diagonal inverse-Kasteleyn values
    K^{-1}(w(0, 0), b(d, d)) for d = n_i - n_j.  These are a_d up to the sign
    (-1)^(d + 1); one and two offsets cannot tell the difference, but three
    consecutive offsets with the bare a_d give a negative determinant.
    """
    offsets = list(offsets)
    if len(set(offsets)) != len(offsets):
        raise MalformedSpec("Column offsets must be distinct.")
    if not offsets:
        return 1.0
    kernel = column_kernel(theta_a, max(offsets) - min(offsets))
    matrix = np.array([[kernel.diagonal(i - j) for j in offsets] for i in offsets])
    return float(np.linalg.det(matrix))


def column_variance(theta_a: float, k: int) -> float:
    """Variance of the number of a-edges among k consecutive column positions.

    Tr(M_k (I - M_k)) = k a_0 (1 - a_0) - sum_j 2 (k - j) a_j^2.
    """
    if k < 1:
        raise MalformedSpec("k must be at least 1.")
    entries = _column_entries(float(theta_a), k - 1)
    j = np.arange(1, k)
    return float(k * entries[0] * (1 - entries[0]) - np.sum(2 * (k - j) * entries[1:] ** 2))


def column_variance_trace(theta_a: float, k: int) -> float:
    if k < 1:
        raise MalformedSpec("k must be at least 1.")
    M = column_kernel(theta_a, k - 1).matrix(k)
    return float(np.trace(M @ (np.eye(k) - M)))


@dataclass(frozen=True)
class LogFit:
    slope: float
    intercept: float
    ks: tuple[int, ...]
    values: tuple[float, ...]


def variance_log_fit(theta_a: float, ks: Sequence[int]) -> LogFit:
    """Least-squares line through (log k, column_variance); the intercept is the measured O(1) constant."""
    values = [column_variance(theta_a, k) for k in ks]
    slope, intercept = np.polyfit(np.log(np.asarray(ks, dtype=float)), values, 1)
    logger.debug("Variance fit: slope %.6g, intercept %.6g over %d sizes", slope, intercept, len(ks))
    return LogFit(float(slope), float(intercept), tuple(int(k) for k in ks), tuple(values))


# --- Gaussian free field ------------------------------------------------------------


def green_function(z1: complex, z2: complex) -> float:
    if z1 == z2:
        raise MalformedSpec("The Green's function is singular at coincident points.")
    return -math.log(abs(complex(z1) - complex(z2))) / (2 * math.pi)


def gff_second_moment(z1: complex, z2: complex, z3: complex, z4: complex) -> float:
    """Limit of E[(h(z1) - h(z2)) (h(z3) - h(z4))] in dimer units."""
    z1, z2, z3, z4 = (complex(z) for z in (z1, z2, z3, z4))
    if z1 == z2 or z3 == z4:
        return 0.0
    if {z1, z2} & {z3, z4}:
        raise MalformedSpec("The two increments share an endpoint.")
    ratio = ((z2 - z4) * (z1 - z3)) / ((z2 - z3) * (z1 - z4))
    return -math.log(abs(ratio)) / (2 * math.pi**2)


def green_expansion(z1: complex, z2: complex, z3: complex, z4: complex) -> float:
    """g(z1, z3) - g(z1, z4) - g(z2, z3) + g(z2, z4), which is pi times the second moment."""
    return green_function(z1, z3) - green_function(z1, z4) - green_function(z2, z3) + green_function(z2, z4)


def pairings(indices: Sequence[int]) -> Iterable[list[tuple[int, int]]]:
    if not indices:
        yield []
        return
    first, rest = indices[0], indices[1:]
    for k, partner in enumerate(rest):
        for tail in pairings(rest[:k] + rest[k + 1 :]):
            yield [(first, partner)] + tail


def wick_moment(covariance) -> float:
    """Sum over pairings of products of covariances: the Gaussian moment of the product."""
    covariance = np.asarray(covariance, dtype=float)
    size = covariance.shape[0]
    if covariance.shape != (size, size):
        raise MalformedSpec("The covariance must be a square matrix.")
    if size % 2:
        return 0.0
    return float(sum(math.prod(covariance[i, j] for i, j in pairing) for pairing in pairings(list(range(size)))))


def wick_fourth_moment(second_moments) -> float:
    """C12 C34 + C13 C24 + C14 C23 from the 4 x 4 matrix of second moments."""
    second_moments = np.asarray(second_moments, dtype=float)
    if second_moments.shape != (4, 4):
        raise MalformedSpec("The fourth moment needs a 4 x 4 matrix of second moments.")
    return wick_moment(second_moments)


def gff_covariance(pairs: Sequence[tuple[complex, complex]]) -> np.ndarray:
    size = len(pairs)
    out = np.zeros((size, size))
    for i, j in itertools.product(range(size), repeat=2):
        (p, q), (r, s) = pairs[i], pairs[j]
        if i == j:
            out[i, j] = math.nan if p != q else 0.0
        else:
            out[i, j] = gff_second_moment(p, q, r, s)
    return out


# --- Monte Carlo moments ------------------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    samples: int

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        if not math.isfinite(self.stderr):
            return True
        return abs(self.mean - value) <= sigmas * self.stderr + 1e-12


def nearest_face(g: BipartiteGraph, point: tuple[float, float]) -> int:
    faces = g.faces if g.is_periodic else g.bounded_faces
    centroids = np.array([g.face_centroid(face) for face in faces])
    k = int(np.argmin(np.hypot(centroids[:, 0] - point[0], centroids[:, 1] - point[1])))
    return faces[k].index


def increment_samples(batch: SampleBatch, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Per sample and per pair, h(first face) - h(second face)."""
    g = batch.graph
    out = np.zeros((len(batch.matchings), len(pairs)))
    for row, matching in enumerate(batch.matchings):
        heights = height_function(g, matching, cut_seams=g.is_periodic)
        out[row] = [float(heights[p] - heights[q]) for p, q in pairs]
    return out


def _batch(region, samples, seed, method, threads) -> SampleBatch:
    if isinstance(samples, SampleBatch):
        return samples
    return sample_batch(region, int(samples), seed=seed, method=method or METHOD_EXACT, threads=threads)


def empirical_moment(
    region: BipartiteGraph,
    pairs: Sequence[tuple[int, int]],
    samples: SampleBatch | int,
    *,
    seed: int | None = None,
    method: str | None = None,
    threads: int | None = None,
    centered: bool = True,
) -> MomentEstimate:
    """Monte Carlo estimate of E[prod (h(p) - h(q))] over face pairs, increments centred by default."""
    batch = _batch(region, samples, seed, method, threads)
    if not pairs:
        raise MalformedSpec("At least one face pair is required.")
    increments = increment_samples(batch, pairs)
    if centered:
        increments = increments - increments.mean(axis=0)
    products = np.prod(increments, axis=1)
    count = len(products)
    if count < 2:
        logger.warning("One sample gives no error estimate")
        return MomentEstimate(float(products.mean()), math.inf, count)
    return MomentEstimate(float(products.mean()), float(products.std(ddof=1) / math.sqrt(count)), count)


@dataclass(frozen=True)
class WickComparison:
    fourth: MomentEstimate
    covariance: np.ndarray
    prediction: float

    @property
    def agrees(self) -> bool:
        return self.fourth.within(self.prediction)


def wick_comparison(batch: SampleBatch, pairs: Sequence[tuple[int, int]]) -> WickComparison:
    """Measured fourth moment of four increments against the pairing sum of measured second moments."""
    if len(pairs) != 4:
        raise MalformedSpec("The Wick comparison takes four face pairs.")
    increments = increment_samples(batch, pairs)
    increments = increments - increments.mean(axis=0)
    covariance = increments.T @ increments / len(increments)
    products = np.prod(increments, axis=1)
    count = len(products)
    stderr = float(products.std(ddof=1) / math.sqrt(count)) if count > 1 else math.inf
    fourth = MomentEstimate(float(products.mean()), stderr, count)
    return WickComparison(fourth=fourth, covariance=covariance, prediction=wick_fourth_moment(covariance))


__all__ = [
    "ColumnKernel",
    "LogFit",
    "MomentEstimate",
    "WickComparison",
    "column_kernel",
    "column_probability",
    "column_variance",
    "column_variance_trace",
    "edge_probability_infinite",
    "empirical_moment",
    "gff_covariance",
    "gff_second_moment",
    "green_expansion",
    "green_function",
    "increment_samples",
    "kinv_asymptotic",
    "kinv_infinite",
    "nearest_face",
    "opposite_angle",
    "pairings",
    "torus_kinv",
    "variance_log_fit",
    "wick_comparison",
    "wick_fourth_moment",
    "wick_moment",
]
