"""Random dimer covers: exact sequential sampling and Metropolis face-flip chains.

Exact samples condition on one white vertex at a time.  With the current
inverse Kasteleyn matrix Kinv (whites x blacks) the edge e = wb is present
with probability Re(K(e) Kinv[w, b]); after choosing it the inverse of K with
row b and column w removed is Kinv - Kinv[:, b] Kinv[w, :] / Kinv[w, b].
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .conf import resolve
from .exceptions import InfeasibleInput, MalformedSpec
from .graphs import BipartiteGraph, Matching, check_perfect, matching_weight
from .heights import height_function, require_tileable
from .kasteleyn import KasteleynMatrix, kasteleyn_matrix, partition_function

logger = logging.getLogger(__name__)

METHOD_EXACT = "exact"
METHOD_GLAUBER = "glauber"
METHODS = (METHOD_EXACT, METHOD_GLAUBER)


@dataclass(frozen=True)
class SampleBatch:
    graph: BipartiteGraph
    matchings: tuple[Matching, ...]
    seed: int
    method: str
    log_probabilities: tuple[float, ...] = ()

    def __len__(self) -> int:
        return len(self.matchings)


# --- exact sampling ----------------------------------------------------------------


@dataclass
class _ExactState:
    """Floating inverse and edge values shared by every sample of a batch."""

    graph: BipartiteGraph
    values: np.ndarray  # K(e) per edge
    inverse: np.ndarray  # [white, black]
    by_white: list[list[int]] = field(default_factory=list)


def _exact_state(g: BipartiteGraph, K: KasteleynMatrix | None = None) -> _ExactState:
    if g.is_periodic:
        raise MalformedSpec("Exact sampling works on planar regions; use the glauber method on a torus.")
    if not g.is_balanced:
        raise InfeasibleInput("untileable")
    K = K or kasteleyn_matrix(g)
    matrix = K.to_numpy()
    try:
        inverse = np.linalg.inv(matrix) if g.n_white else np.zeros((0, 0), dtype=np.complex128)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleInput("untileable") from exc
    if g.n_white and not np.all(np.isfinite(inverse)):
        raise InfeasibleInput("untileable")
    values = K.phasing.complex_units() * np.array([float(e.weight) for e in g.edges])
    by_white: list[list[int]] = [[] for _ in range(g.n_white)]
    for index, edge in enumerate(g.edges):
        by_white[edge.white].append(index)
    logger.debug("Exact sampler ready for %s (%d white vertices)", g.name or "region", g.n_white)
    return _ExactState(graph=g, values=values, inverse=inverse, by_white=by_white)


def _draw_exact(state: _ExactState, rng: np.random.Generator) -> tuple[Matching, float]:
    g = state.graph
    inverse = state.inverse.copy()
    used_black = np.zeros(g.n_black, dtype=bool)
    chosen, log_p = [], 0.0
    for white in range(g.n_white):
        candidates = [e for e in state.by_white[white] if not used_black[g.edges[e].black]]
        probs = np.array([(state.values[e] * inverse[white, g.edges[e].black]).real for e in candidates])
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if not candidates or total <= 0:
            raise InfeasibleInput("untileable")
        if abs(total - 1.0) > 1e-6:
            logger.debug("Conditional probabilities at white %d sum to %.12f", white, total)
        probs = probs / total
        pick = int(rng.choice(len(candidates), p=probs))
        edge_index = candidates[pick]
        black = g.edges[edge_index].black
        log_p += math.log(probs[pick])
        chosen.append(edge_index)
        used_black[black] = True
        pivot = inverse[white, black]
        inverse -= np.outer(inverse[:, black], inverse[white, :]) / pivot
    return frozenset(chosen), log_p


def exact_sample(g: BipartiteGraph, phasing=None, seed: int | None = None) -> Matching:
    """One cover drawn from the Boltzmann measure by sequential conditioning."""
    seed = resolve("SEED", seed)
    K = kasteleyn_matrix(g, phasing) if phasing is not None else None
    if partition_function(g, phasing) == 0:
        raise InfeasibleInput("untileable")
    matching, _ = _draw_exact(_exact_state(g, K), np.random.default_rng(seed))
    return matching


def cover_log_probability(g: BipartiteGraph, matching: Iterable[int]) -> float:
    """log(prod w / Z) of a planar cover."""
    chosen = check_perfect(g, matching)
    z = partition_function(g)
    if z == 0:
        raise InfeasibleInput("untileable")
    weight = matching_weight(g, chosen)
    return math.log(weight) - math.log(z)


# --- Glauber dynamics --------------------------------------------------------------


@dataclass
class _FlipTable:
    faces: list[tuple[np.ndarray, np.ndarray]]  # (even-position edges, odd-position edges)
    log_weights: np.ndarray


def _flip_table(g: BipartiteGraph) -> _FlipTable:
    candidates = g.faces if g.is_periodic else g.bounded_faces
    faces = []
    for face in candidates:
        edges = face.edges
        if len(set(edges)) != len(edges) or len(edges) % 2:
            continue
        faces.append((np.array(edges[0::2], dtype=int), np.array(edges[1::2], dtype=int)))
    log_weights = np.array([math.log(e.weight) for e in g.edges])
    return _FlipTable(faces=faces, log_weights=log_weights)


def _run_chain(table: _FlipTable, present: np.ndarray, steps: int, rng: np.random.Generator) -> int:
    """Metropolis face flips in place; returns the number of accepted flips."""
    if not table.faces or steps <= 0:
        return 0
    picks = rng.integers(len(table.faces), size=steps)
    coins = rng.random(steps)
    accepted = 0
    for pick, coin in zip(picks, coins):
        even, odd = table.faces[pick]
        if present[even].all() and not present[odd].any():
            on, off = even, odd
        elif present[odd].all() and not present[even].any():
            on, off = odd, even
        else:
            continue
        log_ratio = table.log_weights[off].sum() - table.log_weights[on].sum()
        if log_ratio >= 0 or coin < math.exp(log_ratio):
            present[on] = False
            present[off] = True
            accepted += 1
    return accepted


def glauber_chain(g: BipartiteGraph, M0: Iterable[int], steps: int, seed: int | None = None) -> Matching:
    """``steps`` uniformly proposed face flips with Metropolis acceptance under the edge weights."""
    chosen = check_perfect(g, M0)
    if steps < 0:
        raise MalformedSpec("The number of steps must be non-negative.")
    rng = np.random.default_rng(resolve("SEED", seed))
    present = np.zeros(len(g.edges), dtype=bool)
    present[list(chosen)] = True
    accepted = _run_chain(_flip_table(g), present, steps, rng)
    logger.debug("Glauber chain on %s: %d of %d flips accepted", g.name or "region", accepted, steps)
    return frozenset(int(e) for e in np.flatnonzero(present))


def burn_in_steps(g: BipartiteGraph, sweeps: int | None = None) -> int:
    """``sweeps`` sweeps of |faces| proposals each."""
    sweeps = int(resolve("GLAUBER_BURN_IN_SWEEPS", sweeps))
    return sweeps * len(g.faces)


def brick_cover(cover: BipartiteGraph) -> Matching:
    """Flat cover of a honeycomb torus cover with side divisible by 3: edge type (cx + 2 cy) mod 3."""
    n = int(cover.meta.get("n", 0)) if cover.meta else 0
    if cover.lattice != "honeycomb" or not n or n % 3 or len(cover.edges) != 3 * cover.n_white:
        raise MalformedSpec("Brick covers exist for honeycomb torus covers whose side is a multiple of 3.")
    labels = ("a", "b", "c")
    chosen = []
    for index, edge in enumerate(cover.edges):
        cx, cy, _ = cover.white_cells[edge.white]
        if edge.label == labels[(cx + 2 * cy) % 3]:
            chosen.append(index)
    return check_perfect(cover, chosen)


def starting_cover(g: BipartiteGraph) -> Matching:
    if g.is_periodic and g.lattice == "honeycomb" and g.meta and int(g.meta.get("n", 0)) % 3 == 0:
        return brick_cover(g)
    return require_tileable(g)


# --- batches -----------------------------------------------------------------------


def sample_batch(
    g: BipartiteGraph,
    count: int,
    seed: int | None = None,
    method: str = METHOD_EXACT,
    threads: int | None = None,
    *,
    steps: int | None = None,
) -> SampleBatch:
    """``count`` independent samples, sample k using the k-th child stream of the master seed.

    Results do not depend on ``threads``.  Glauber samples are independent chains
    started from a fixed cover and run for ``steps`` proposals (default: the burn-in).
    """
    if count < 0:
        raise MalformedSpec("The sample count must be non-negative.")
    if method not in METHODS:
        raise MalformedSpec(f"Unknown sampling method {method!r}; expected one of {', '.join(METHODS)}.")
    seed = int(resolve("SEED", seed))
    threads = max(1, int(resolve("SAMPLER_THREADS", threads)))
    streams = np.random.SeedSequence(seed).spawn(count)

    if method == METHOD_EXACT:
        if partition_function(g) == 0:
            raise InfeasibleInput("untileable")
        state = _exact_state(g)

        def draw(stream):
            return _draw_exact(state, np.random.default_rng(stream))

    else:
        start = starting_cover(g)
        table = _flip_table(g)
        length = burn_in_steps(g) if steps is None else int(steps)
        base = np.zeros(len(g.edges), dtype=bool)
        base[list(start)] = True

        def draw(stream):
            present = base.copy()
            _run_chain(table, present, length, np.random.default_rng(stream))
            return frozenset(int(e) for e in np.flatnonzero(present)), math.nan

    if threads == 1:
        results = [draw(stream) for stream in streams]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(draw, streams))
    logger.debug("Drew %d %s samples of %s with %d threads", count, method, g.name or "region", threads)
    return SampleBatch(
        graph=g,
        matchings=tuple(m for m, _ in results),
        seed=seed,
        method=method,
        log_probabilities=tuple(p for _, p in results),
    )


# --- statistics --------------------------------------------------------------------


@dataclass(frozen=True)
class StatsQuery:
    faces: tuple[int, ...] = ()
    grid: int | None = None
    labels: tuple[str, ...] = ()
    base_face: int | None = None


@dataclass(frozen=True)
class StatsReport:
    samples: int
    edge_frequency: np.ndarray
    edge_stderr: np.ndarray
    height_mean: Mapping[int, float]
    height_variance: Mapping[int, float]
    density: Mapping[str, np.ndarray]
    extent: tuple[float, float, float, float] | None

    def z_scores(self, probabilities: Sequence[float | Fraction]) -> np.ndarray:
        expected = np.array([float(p) for p in probabilities])
        spread = np.sqrt(np.maximum(expected * (1 - expected), 1e-300) / max(self.samples, 1))
        return (self.edge_frequency - expected) / spread


def _edge_midpoints(g: BipartiteGraph) -> np.ndarray:
    points = []
    for index, edge in enumerate(g.edges):
        wx, wy = g.white_positions[edge.white]
        dx, dy = g.displacement(index, True)
        points.append((wx + dx / 2, wy + dy / 2))
    return np.array(points)


def collect_stats(batch: SampleBatch, queries: StatsQuery | None = None) -> StatsReport:
    """Edge frequencies, height moments at faces and per-label density grids."""
    if not batch.matchings:
        raise MalformedSpec("Statistics need at least one sample.")
    queries = queries or StatsQuery()
    g = batch.graph
    occupancy = np.zeros((len(batch.matchings), len(g.edges)), dtype=float)
    for row, matching in enumerate(batch.matchings):
        occupancy[row, list(matching)] = 1.0
    frequency = occupancy.mean(axis=0)
    stderr = occupancy.std(axis=0) / math.sqrt(len(batch.matchings))

    means: dict[int, float] = {}
    variances: dict[int, float] = {}
    if queries.faces:
        table = np.zeros((len(batch.matchings), len(queries.faces)))
        for row, matching in enumerate(batch.matchings):
            heights = height_function(g, matching, f0=queries.base_face, cut_seams=g.is_periodic)
            table[row] = [float(heights.scaled(f)) for f in queries.faces]
        for column, face in enumerate(queries.faces):
            means[face] = float(table[:, column].mean())
            variances[face] = float(table[:, column].var())

    density: dict[str, np.ndarray] = {}
    extent = None
    if queries.grid:
        midpoints = _edge_midpoints(g)
        x0, y0 = midpoints.min(axis=0)
        x1, y1 = midpoints.max(axis=0)
        extent = (float(x0), float(x1), float(y0), float(y1))
        bins = [np.linspace(x0, x1 + 1e-9, queries.grid + 1), np.linspace(y0, y1 + 1e-9, queries.grid + 1)]
        labels = queries.labels or tuple(sorted({e.label for e in g.edges}))
        # share of the covered edges in each bin that carry the label
        total, _, _ = np.histogram2d(midpoints[:, 0], midpoints[:, 1], bins=bins, weights=frequency)
        for label in labels:
            mask = np.array([e.label == label for e in g.edges])
            hits, _, _ = np.histogram2d(midpoints[mask, 0], midpoints[mask, 1], bins=bins, weights=frequency[mask])
            with np.errstate(invalid="ignore", divide="ignore"):
                density[label] = np.where(total > 0, hits / total, np.nan)
    return StatsReport(
        samples=len(batch.matchings),
        edge_frequency=frequency,
        edge_stderr=stderr,
        height_mean=means,
        height_variance=variances,
        density=density,
        extent=extent,
    )


def label_frequency(g: BipartiteGraph, frequency: np.ndarray, label: str, window=None) -> float:
    """Share of covered edges carrying ``label`` among edges whose midpoint lies in ``window``."""
    midpoints = _edge_midpoints(g)
    mask = np.ones(len(g.edges), dtype=bool)
    if window is not None:
        x0, x1, y0, y1 = window
        mask = (midpoints[:, 0] >= x0) & (midpoints[:, 0] <= x1) & (midpoints[:, 1] >= y0) & (midpoints[:, 1] <= y1)
    labelled = mask & np.array([e.label == label for e in g.edges])
    covered = float(frequency[mask].sum())
    if covered == 0:
        raise MalformedSpec("No edges in the requested window.")
    return float(frequency[labelled].sum()) / covered


__all__ = [
    "METHODS",
    "METHOD_EXACT",
    "METHOD_GLAUBER",
    "SampleBatch",
    "StatsQuery",
    "StatsReport",
    "brick_cover",
    "burn_in_steps",
    "collect_stats",
    "cover_log_probability",
    "exact_sample",
    "glauber_chain",
    "label_frequency",
    "sample_batch",
    "starting_cover",
]
