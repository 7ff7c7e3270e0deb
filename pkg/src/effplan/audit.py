"""
Monte-Carlo audit of motion planners.

Pairs are drawn from the product of normalized Riemannian volumes, in fixed
chunks of ``CHUNK`` pairs. Chunk i uses the generator seeded with
``[seed, i]``, so the pair stream depends only on (seed, n_pairs) and not on
the number of worker threads, the grid, or the planner. Distance and length
estimates with the same seed therefore see the same pairs, which makes the
defect a paired estimate.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import GeometryError
from .geodesics import DEFAULT_CUT_TOL, cut_gap_batch, distance_batch
from .manifolds import Manifold
from .planners import DEFAULT_GRID, EVAL_CHUNK, MotionPlanner, path_lengths, sup_distance

CHUNK = 1024
SCHEMA_VERSION = 1
DEFAULT_EPSILONS = (0.1, 0.05, 0.025, 0.0125)
EFFICIENCY_FLOOR = 1e-4
MAX_LENGTH_FACTOR = 10.0


class IntegralEstimate(NamedTuple):
    mean: float
    stderr: float
    integral: float  # mean * vol(X)^2
    volume: float


class LengthEstimate(NamedTuple):
    mean: float
    stderr: float
    domain_histogram: dict


class CutbandPoint(NamedTuple):
    epsilon: float
    fraction: float
    stderr: float


def _chunks(n_pairs):
    return [(i, min(CHUNK, n_pairs - s)) for i, s in enumerate(range(0, n_pairs, CHUNK))]


def chunk_pairs(m: Manifold, seed: int, index: int, size: int):
    rng = np.random.default_rng([seed, index])
    return m.sample(rng, size), m.sample(rng, size)


def _map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    n = len(x)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def estimate_distance_integral(m: Manifold, n_pairs: int, seed: int = 0, threads: int = 1):
    """Mean of d over volume-uniform pairs, its standard error, and the unnormalized integral."""
    if n_pairs < 1000:
        raise ValueError("n_pairs must be at least 1000")

    def work(chunk):
        P, Q = chunk_pairs(m, seed, *chunk)
        return distance_batch(m, P, Q)

    d = np.concatenate(_map(work, _chunks(n_pairs), threads))
    mean, se = _mean_se(d)
    return IntegralEstimate(mean, se, mean * m.volume ** 2, m.volume)


def _planner_chunk(m, planner, seed, grid_size, chunk):
    P, Q = chunk_pairs(m, seed, *chunk)
    L = np.empty(len(P))
    ids = np.empty(len(P), dtype=np.int64)
    for s in range(0, len(P), EVAL_CHUNK):
        X, ids[s:s + EVAL_CHUNK] = planner.paths(P[s:s + EVAL_CHUNK], Q[s:s + EVAL_CHUNK], grid_size)
        L[s:s + EVAL_CHUNK] = path_lengths(m, X)
    bound = MAX_LENGTH_FACTOR * m.diameter
    if np.any(~np.isfinite(L)) or np.any(L > bound):
        i = int(np.flatnonzero(~(L <= bound))[0])
        raise GeometryError(f"path length {L[i]:.6g} exceeds 10 x diameter ({bound:.6g})")
    return L, distance_batch(m, P, Q), ids


def _planner_samples(m, planner, n_pairs, grid_size, seed, threads):
    if n_pairs < 1000:
        raise ValueError("n_pairs must be at least 1000")
    parts = _map(lambda c: _planner_chunk(m, planner, seed, grid_size, c), _chunks(n_pairs), threads)
    L = np.concatenate([p[0] for p in parts])
    D = np.concatenate([p[1] for p in parts])
    ids = np.concatenate([p[2] for p in parts])
    return L, D, ids


def _histogram(ids, n_sections):
    counts = np.bincount(ids, minlength=n_sections)
    return {str(i): int(c) for i, c in enumerate(counts)}


def estimate_planner_length(m: Manifold, planner: MotionPlanner, n_pairs: int,
                            grid_size: int = DEFAULT_GRID, seed: int = 0, threads: int = 1):
    """Mean path length of the planner's output over volume-uniform pairs.

    Raises DispatchFailure (with the pair) if some pair is not covered.
    """
    L, _, ids = _planner_samples(m, planner, n_pairs, grid_size, seed, threads)
    mean, se = _mean_se(L)
    return LengthEstimate(mean, se, _histogram(ids, len(planner.sections)))


def cutband_measure(m: Manifold, epsilons, n_pairs: int, seed: int = 0, threads: int = 1):
    """Fraction of pairs with in_cut_locus(p, q, eps) for each eps."""
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ValueError("need at least one epsilon")
    if any(e < 0 for e in eps) or any(b > a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be nonnegative and decreasing")

    def work(chunk):
        P, Q = chunk_pairs(m, seed, *chunk)
        gap = cut_gap_batch(m, P, Q)
        return np.array([np.count_nonzero(gap <= e) for e in eps])

    counts = np.sum(_map(work, _chunks(n_pairs), threads), axis=0)
    out = []
    for e, c in zip(eps, counts):
        f = c / n_pairs
        out.append(CutbandPoint(e, float(f), float(math.sqrt(f * (1.0 - f) / n_pairs))))
    return out


@dataclass
class AuditReport:
    planner_name: str
    manifold: dict
    n_pairs: int
    seed: int
    grid_size: int
    cut_tolerance: float
    volume: float
    mean_length: float
    mean_length_se: float
    mean_distance: float
    mean_distance_se: float
    defect: float
    defect_se: float
    max_section0_defect: float
    min_length_minus_distance: float
    domain_histogram: dict
    cutband_curve: list = field(default_factory=list)

    @property
    def integral_length(self):
        return self.mean_length * self.volume ** 2

    @property
    def integral_distance(self):
        return self.mean_distance * self.volume ** 2

    @property
    def threshold(self):
        return max(EFFICIENCY_FLOOR, 3.0 * self.defect_se)

    @property
    def efficient(self):
        return abs(self.defect) <= self.threshold

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "planner_name": self.planner_name,
            "manifold": self.manifold,
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "cut_tolerance": self.cut_tolerance,
            "volume": self.volume,
            "mean_length": self.mean_length,
            "mean_length_se": self.mean_length_se,
            "mean_distance": self.mean_distance,
            "mean_distance_se": self.mean_distance_se,
            "integral_length": self.integral_length,
            "integral_distance": self.integral_distance,
            "defect": self.defect,
            "defect_se": self.defect_se,
            "efficiency_threshold": self.threshold,
            "efficient": self.efficient,
            "max_section0_defect": self.max_section0_defect,
            "min_length_minus_distance": self.min_length_minus_distance,
            "domain_histogram": self.domain_histogram,
            "cutband_curve": [[float(p[0]), float(p[1])] for p in self.cutband_curve],
        }

    def to_json(self):
        from ._io import dumps

        return dumps(self.to_dict())


def audit(m: Manifold, planner: MotionPlanner, n_pairs: int, grid_size: int = DEFAULT_GRID,
          seed: int = 0, threads: int = 1, epsilons=DEFAULT_EPSILONS,
          cut_tolerance: float = DEFAULT_CUT_TOL) -> AuditReport:
    """Paired estimates of the planner length, the distance integral and their difference."""
    L, D, ids = _planner_samples(m, planner, n_pairs, grid_size, seed, threads)
    ml, sl = _mean_se(L)
    md, sd = _mean_se(D)
    defect, sdef = _mean_se(L - D)
    on0 = ids == 0
    curve = cutband_measure(m, epsilons, n_pairs, seed, threads) if epsilons else []
    return AuditReport(
        planner_name=planner.name,
        manifold=m.config(),
        n_pairs=n_pairs,
        seed=seed,
        grid_size=grid_size,
        cut_tolerance=cut_tolerance,
        volume=float(m.volume),
        mean_length=ml,
        mean_length_se=sl,
        mean_distance=md,
        mean_distance_se=sd,
        defect=defect,
        defect_se=sdef,
        max_section0_defect=float(np.max(L[on0] - D[on0])) if on0.any() else 0.0,
        min_length_minus_distance=float(np.min(L - D)),
        domain_histogram=_histogram(ids, len(planner.sections)),
        cutband_curve=curve,
    )


# -- discontinuity scan -----------------------------------------------------------------

@dataclass
class Witness:
    p: np.ndarray
    q: np.ndarray
    p2: np.ndarray
    q2: np.ndarray
    input_separation: float
    output_separation: float
    domains: tuple


def away_from_cut(m: Manifold, margin: float):
    """Pair filter keeping pairs at least ``margin`` from the cut-locus band."""
    return lambda P, Q: cut_gap_batch(m, P, Q) > margin


def _pair_distance(m, A, B):
    if m.has_closed_form:
        return m.distance(A, B)
    return np.linalg.norm(A - B, axis=-1)


def discontinuity_scan(m: Manifold, planner: MotionPlanner, n_probe_pairs: int = 2000,
                       delta: float = 1e-3, seed: int = 0, threshold: float = 0.5,
                       grid_size: int = 65, where=None):
    """Look for nearby input pairs whose output paths are far apart.

    Half of the probes are uniform pairs, half sit within ``delta`` of the cut
    locus (or tie set), where discontinuities of the built-in planners live.
    Each probe (p, q) is paired with (p', q') with d(p, p') + d(q, q') <= delta;
    a witness is a probe whose outputs are >= ``threshold`` apart in sup metric.
    ``where`` optionally restricts both pairs of a probe.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rng = np.random.default_rng(seed)
    n_near = n_probe_pairs // 2
    P1, Q1 = m.sample(rng, n_probe_pairs - n_near), m.sample(rng, n_probe_pairs - n_near)
    P2, Q2 = m.near_cut_pairs(rng, n_near, delta)
    P = np.concatenate([P1, P2])
    Q = np.concatenate([Q1, Q2])
    Pp = m.perturb(P, rng, 0.5 * delta)
    Qp = m.perturb(Q, rng, 0.5 * delta)
    sep = _pair_distance(m, P, Pp) + _pair_distance(m, Q, Qp)
    keep = sep <= delta
    if where is not None:
        keep &= np.asarray(where(P, Q), bool) & np.asarray(where(Pp, Qp), bool)
    P, Q, Pp, Qp, sep = P[keep], Q[keep], Pp[keep], Qp[keep], sep[keep]
    if len(P) == 0:
        return []
    X, ids = planner.paths(P, Q, grid_size)
    Y, ids2 = planner.paths(Pp, Qp, grid_size)
    out_sep = sup_distance(m, X, Y)
    hits = np.flatnonzero(out_sep >= threshold)
    return [Witness(P[i], Q[i], Pp[i], Qp[i], float(sep[i]), float(out_sep[i]),
                    (int(ids[i]), int(ids2[i]))) for i in hits]
