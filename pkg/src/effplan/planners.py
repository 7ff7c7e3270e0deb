"""
Motion planners as ordered lists of (domain predicate, local section) pairs.

A section maps a batch of endpoint pairs (P, Q) and parameter values T of
shape (B, m) to points of shape (B, m, k). Dispatch is first-match, so the
effective domain of section i is G_i minus the union of G_0..G_{i-1}; this
keeps the domains pairwise disjoint without storing them.

Analytic facts not checked at runtime: the geodesic domain (pairs off the cut
locus) is open, hence locally compact; the fallback domains used here are
open sets or finite unions of closed submanifolds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DispatchFailure
from .geodesics import DEFAULT_CUT_TOL, cut_gap_batch, exp_batch, log_batch
from .manifolds import (
    Ellipsoid,
    FlatTorus,
    Hemisphere,
    Manifold,
    Sphere,
    _sphere_exp,
    _sphere_log,
    from_config,
    minimal_image,
    wrap_angle,
)

DEFAULT_GRID = 257
MIN_GRID = 65
ENDPOINT_TOL = 1e-8
EVAL_CHUNK = 256


# -- paths ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretePath:
    """A path sampled on the uniform grid t_i = i / (G - 1)."""

    manifold: Manifold
    points: np.ndarray

    def __post_init__(self):
        if len(self.points) < MIN_GRID:
            raise ValueError(f"paths need at least {MIN_GRID} samples")

    @property
    def t(self):
        return np.linspace(0.0, 1.0, len(self.points))

    @property
    def grid_size(self):
        return len(self.points)

    def length(self):
        return path_length(self)

    def to_csv(self, fname):
        from ._io import write_csv

        cols = ["t"] + [f"x{i + 1}" for i in range(self.points.shape[1])]
        write_csv(fname, cols, np.column_stack([self.t, self.points]))


def _segment_distances(m, X):
    A, B = X[..., :-1, :], X[..., 1:, :]
    if m.has_closed_form:
        return m.distance(A, B)
    return np.linalg.norm(B - A, axis=-1)


def path_lengths(m: Manifold, X, return_error=False):
    """Metric-sense lengths of sampled paths X of shape (..., G, k).

    Sums of distances between consecutive samples. Without a closed-form
    distance (ellipsoid) chord sums are used and extrapolated with the
    half-resolution sum (chord sums converge like h^2); the error estimate is
    the size of that correction.
    """
    fine = np.sum(_segment_distances(m, X), axis=-1)
    G = X.shape[-2]
    if G % 2 == 1:
        coarse = np.sum(_segment_distances(m, X[..., ::2, :]), axis=-1)
    else:
        coarse = fine
    if m.has_closed_form:
        length, err = fine, np.abs(fine - coarse)
    else:
        corr = (fine - coarse) / 3.0
        length, err = fine + corr, np.abs(corr)
    return (length, err) if return_error else length


def path_length(path: DiscretePath, return_error=False):
    out = path_lengths(path.manifold, path.points, return_error)
    if return_error:
        return float(out[0]), float(out[1])
    return float(out)


def sup_distance(m: Manifold, X, Y):
    """max_t d(X(t), Y(t)) row-wise; chord distance where no closed form exists."""
    if m.has_closed_form:
        return np.max(m.distance(X, Y), axis=-1)
    return np.max(np.linalg.norm(X - Y, axis=-1), axis=-1)


# -- sections and planners -------------------------------------------------------------

@dataclass(frozen=True)
class LocalSection:
    name: str
    membership: Callable[[np.ndarray, np.ndarray], np.ndarray]
    section: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MotionPlanner:
    name: str
    manifold: Manifold
    sections: tuple
    pair_sampler: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.sections) == 0:
            raise ValueError("a motion planner needs at least one section")
        object.__setattr__(self, "sections", tuple(self.sections))

    @property
    def order(self):
        """m in 'm-motion planner': number of domains minus one."""
        return len(self.sections) - 1

    def dispatch(self, P, Q):
        """Index of the first section accepting each pair, -1 where none does."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        ids = np.full(len(P), -1, dtype=np.int64)
        for i, sec in enumerate(self.sections):
            todo = ids < 0
            if not todo.any():
                break
            acc = np.asarray(sec.membership(P[todo], Q[todo]), dtype=bool)
            ids[np.flatnonzero(todo)[acc]] = i
        return ids

    def evaluate(self, P, Q, T):
        """Points of the dispatched paths at parameters T; returns (X, domain_ids)."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        TT = np.asarray(T, dtype=float)
        if TT.ndim == 1:
            TT = np.broadcast_to(TT, (len(P), len(TT)))
        ids = self.dispatch(P, Q)
        if np.any(ids < 0):
            i = int(np.flatnonzero(ids < 0)[0])
            raise DispatchFailure(f"{self.name}: no section accepts the pair", P[i], Q[i])
        out = np.empty(TT.shape + (P.shape[1],))
        for i, sec in enumerate(self.sections):
            rows = np.flatnonzero(ids == i)
            if len(rows):
                out[rows] = sec.section(P[rows], Q[rows], TT[rows])
        return out, ids

    def paths(self, P, Q, grid_size=DEFAULT_GRID):
        """Batched paths on the uniform grid, evaluated in chunks."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        t = np.linspace(0.0, 1.0, grid_size)
        X = np.empty((len(P), grid_size, P.shape[1]))
        ids = np.empty(len(P), dtype=np.int64)
        for s in range(0, len(P), EVAL_CHUNK):
            X[s:s + EVAL_CHUNK], ids[s:s + EVAL_CHUNK] = self.evaluate(
                P[s:s + EVAL_CHUNK], Q[s:s + EVAL_CHUNK], t)
        return X, ids

    def plan(self, p, q, grid_size=DEFAULT_GRID):
        """Path for one pair and the index of the section that produced it."""
        p = self.manifold.check(p)
        q = self.manifold.check(q)
        X, ids = self.paths(p[None], q[None], grid_size)
        return DiscretePath(self.manifold, X[0]), int(ids[0])


# -- geodesic planner ------------------------------------------------------------------

def not_in_cut_band(m, tol):
    def member(P, Q):
        if isinstance(m, Ellipsoid):
            return _ellipsoid_offcut(m, P, Q, tol)
        return cut_gap_batch(m, P, Q) > tol

    return member


def _ellipsoid_offcut(m, P, Q, tol):
    # detected through the failure mode of the logarithm rather than a full
    # cut-time probe per pair: ambiguous or conjugate endpoints
    from .errors import CutLocus

    ok = np.ones(len(P), dtype=bool)
    for i in range(len(P)):
        try:
            log_batch(m, P[i:i + 1], Q[i:i + 1], tol)
        except CutLocus:
            ok[i] = False
    return ok


def geodesic_section(m: Manifold, tol=DEFAULT_CUT_TOL) -> LocalSection:
    """sigma_0(p, q)(t) = exp_p(t log_p q) on the complement of the cut-locus band."""
    def section(P, Q, T):
        V = log_batch(m, P, Q, tol)
        if isinstance(m, Hemisphere):
            # minor arcs between points with z >= 0 keep z >= 0
            return _sphere_exp(P, V, T)
        return exp_batch(m, P, V, T)

    return LocalSection("sigma0", not_in_cut_band(m, tol), section)


def sigma0(m: Manifold, p, q, grid_size=DEFAULT_GRID, tol=DEFAULT_CUT_TOL) -> DiscretePath:
    """The minimal geodesic from p to q; raises CutLocus on the cut locus."""
    p = m.check(p)
    q = m.check(q)
    sec = geodesic_section(m, tol)
    t = np.linspace(0.0, 1.0, grid_size)[None]
    return DiscretePath(m, sec.section(p[None], q[None], t)[0])


def compose_efficient(m: Manifold, fallback: MotionPlanner, tol=DEFAULT_CUT_TOL,
                      name=None) -> MotionPlanner:
    """sigma_0 on pairs off the cut locus, then the fallback's sections on the rest.

    First-match dispatch restricts every fallback section to the complement of
    the geodesic domain.
    """
    if fallback is None or len(getattr(fallback, "sections", ())) == 0:
        raise ValueError("fallback planner has no sections; totality cannot hold")
    sections = (geodesic_section(m, tol),) + tuple(fallback.sections)
    return MotionPlanner(name or f"sigma0+{fallback.name}", m, sections)


# -- fallbacks on the cut locus --------------------------------------------------------

def _slerp_legs(P, M, Q, T):
    """Broken geodesic P -> M (t in [0, 1/2]) -> Q (t in [1/2, 1]) on a sphere."""
    V1 = _sphere_log(P, M)
    V2 = _sphere_log(M, Q)
    first = _sphere_exp(P, V1, np.clip(2.0 * T, 0.0, 1.0))
    second = _sphere_exp(M, V2, np.clip(2.0 * T - 1.0, 0.0, 1.0))
    return np.where((T <= 0.5)[..., None], first, second)


def _unit(X):
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def _field_s1(P):
    return np.stack([-P[:, 1], P[:, 0]], axis=1)


def _field_s3(P):
    # right multiplication by the quaternion i: (w, x, y, z) i = (-x, w, z, -y)
    w, x, y, z = P.T
    return np.stack([-x, w, z, -y], axis=1)


FIELD_EPS = 1e-9


def _projected_field(P, e):
    return e[None, :] - (P @ e)[:, None] * P


def antipodal_planner_sphere(n: int) -> MotionPlanner:
    """Planner for pairs with p . q < 0, routing through a pivot A(p) orthogonal to p.

    For q = -p the path p -> A(p) -> -p is the great semicircle leaving p in
    direction A(p) (length pi). For n = 1 and n = 3, A is a nowhere-vanishing
    tangent field (rotation by +90 degrees, resp. right multiplication by the
    quaternion i) and one section suffices. On S^2 every tangent field has a
    zero, so the field obtained by projecting e = (0, 0, 1) is used away from
    +-e and a second section pivots through the projection of (1, 0, 0) there.
    """
    m = Sphere(n)

    def opposite(P, Q):
        return np.sum(P * Q, axis=1) < 0.0

    def via(field_fn):
        def section(P, Q, T):
            return _slerp_legs(P, _unit(field_fn(P)), Q, T)
        return section

    if n == 1:
        sections = [LocalSection("antipodal-ccw", opposite, via(_field_s1))]
    elif n == 3:
        sections = [LocalSection("antipodal-quaternion", opposite, via(_field_s3))]
    elif n == 2:
        e = np.array([0.0, 0.0, 1.0])
        e1 = np.array([1.0, 0.0, 0.0])

        def away_from_poles(P, Q):
            return opposite(P, Q) & (np.linalg.norm(_projected_field(P, e), axis=1) > FIELD_EPS)

        sections = [
            LocalSection("antipodal-projected-field", away_from_poles,
                         via(lambda P: _projected_field(P, e))),
            LocalSection("antipodal-poles", opposite, via(lambda P: _projected_field(P, e1))),
        ]
    else:
        raise ValueError("antipodal planners are provided for n = 1, 2, 3")

    def antipodal_pairs(mf, rng, size):
        P = mf.sample(rng, size)
        return P, -P

    return MotionPlanner(f"antipodal-S{n}", m, tuple(sections), pair_sampler=antipodal_pairs)


def torus_tiebreak_planner(n: int, tol=DEFAULT_CUT_TOL) -> MotionPlanner:
    """Straight lines on T^n; coordinates with |delta| within tol of pi go in the + direction.

    All tie patterns share one section. The section is not continuous across
    the tie set, which ``audit.discontinuity_scan`` exhibits.
    """
    m = FlatTorus(n)

    def member(P, Q):
        return np.ones(len(P), dtype=bool)

    def section(P, Q, T):
        D = minimal_image(Q - P)
        tie = np.abs(D) >= math.pi - tol
        D = np.where(tie, np.mod(Q - P, 2.0 * math.pi), D)
        return wrap_angle(P[:, None, :] + T[..., None] * D[:, None, :])

    return MotionPlanner(f"torus-tiebreak-T{n}", m, (LocalSection("tiebreak", member, section),))


def _boundary_orientation_planner(tol=DEFAULT_CUT_TOL) -> MotionPlanner:
    """Antipodal boundary pairs of the hemisphere, routed counterclockwise along z = 0."""
    m = Hemisphere()

    def member(P, Q):
        return m.cut_gap(P, Q) <= tol

    def section(P, Q, T):
        M = _unit(np.stack([-P[:, 1], P[:, 0], np.zeros(len(P))], axis=1))
        return _slerp_legs(P, M, Q, T)

    return MotionPlanner("boundary-ccw", m, (LocalSection("boundary-ccw", member, section),))


def hemisphere_planners(tol=DEFAULT_CUT_TOL):
    """(one-domain planner, two-domain planner) on the closed upper hemisphere.

    Both issue minimal geodesics everywhere. The one-domain planner breaks the
    tie on antipodal boundary pairs by going over the north pole, and is
    discontinuous there. The two-domain planner uses sigma_0 off that set and
    the counterclockwise boundary arc on it.
    """
    m = Hemisphere()
    north = np.array([0.0, 0.0, 1.0])

    def member(P, Q):
        return np.ones(len(P), dtype=bool)

    def section(P, Q, T):
        tie = m.cut_gap(P, Q) <= tol
        out = np.empty(T.shape + (3,))
        if (~tie).any():
            out[~tie] = _sphere_exp(P[~tie], _sphere_log(P[~tie], Q[~tie]), T[~tie])
        if tie.any():
            N = np.broadcast_to(north, P[tie].shape)
            out[tie] = _slerp_legs(P[tie], N, Q[tie], T[tie])
        return out

    one = MotionPlanner("hemisphere-1", m, (LocalSection("geodesic-north-tiebreak", member, section),))
    two = compose_efficient(m, _boundary_orientation_planner(tol), tol, name="hemisphere-2")
    return one, two


PLANNER_NAMES = ("sigma0+antipodal", "sigma0+torus-tiebreak", "hemisphere-1", "hemisphere-2",
                 "antipodal", "torus-tiebreak")


def build_planner(name: str, m, tol=DEFAULT_CUT_TOL) -> MotionPlanner:
    """Planner selected by name for a manifold (instance or config record)."""
    m = from_config(m)
    if name not in PLANNER_NAMES:
        raise ConfigError(f"unknown planner {name!r}; expected one of {', '.join(PLANNER_NAMES)}")
    if name in ("hemisphere-1", "hemisphere-2"):
        if not isinstance(m, Hemisphere):
            raise ConfigError(f"planner {name!r} needs the hemisphere")
        one, two = hemisphere_planners(tol)
        return one if name == "hemisphere-1" else two
    if name in ("sigma0+antipodal", "antipodal"):
        if type(m) is not Sphere or m.n not in (1, 2, 3):
            raise ConfigError(f"planner {name!r} needs a sphere of dimension 1, 2 or 3")
        fb = antipodal_planner_sphere(m.n)
        return fb if name == "antipodal" else compose_efficient(m, fb, tol, name=name)
    if not isinstance(m, FlatTorus):
        raise ConfigError(f"planner {name!r} needs a flat torus")
    fb = torus_tiebreak_planner(m.n, tol)
    return fb if name == "torus-tiebreak" else compose_efficient(m, fb, tol, name=name)


# -- the three properties of sigma_0 -----------------------------------------------------

@dataclass
class PropertyResult:
    name: str
    tolerance: float
    max_deviation: float
    n_checked: int
    n_uncovered: int

    @property
    def passed(self):
        return self.n_uncovered == 0 and self.n_checked > 0 and self.max_deviation <= self.tolerance

    def to_dict(self):
        return {"name": self.name, "tolerance": self.tolerance, "max_deviation": self.max_deviation,
                "n_checked": self.n_checked, "n_uncovered": self.n_uncovered, "passed": self.passed}


@dataclass
class PropertyReport:
    planner_name: str
    results: Sequence[PropertyResult]

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {"planner_name": self.planner_name, "passed": self.passed,
                "properties": [r.to_dict() for r in self.results]}


DIAGONAL_TOL = 1e-8
REVERSAL_TOL = 1e-6
REEVALUATION_TOL = 1e-5


def _covered(planner, P, Q):
    return planner.dispatch(P, Q) >= 0


def check_properties(m: Manifold, planner: MotionPlanner, n_pairs=1000, seed=0,
                     grid_size=DEFAULT_GRID) -> PropertyReport:
    """Check constancy on the diagonal, reversal symmetry and re-evaluation consistency.

    Pairs come from ``planner.pair_sampler`` if set, otherwise from the product
    volume. Pairs a planner does not cover are counted, not raised.
    """
    rng = np.random.default_rng(seed)
    if planner.pair_sampler is not None:
        P, Q = planner.pair_sampler(m, rng, n_pairs)
    else:
        P, Q = m.sample(rng, n_pairs), m.sample(rng, n_pairs)
    t0 = rng.uniform(0.0, 1.0, n_pairs)
    grid = np.linspace(0.0, 1.0, grid_size)

    # constant path on the diagonal
    ok = _covered(planner, P, P)
    dev = 0.0
    if ok.any():
        X, _ = planner.paths(P[ok], P[ok], grid_size)
        dev = float(np.max(m.distance(X, P[ok][:, None, :])) if m.has_closed_form
                    else np.max(np.linalg.norm(X - P[ok][:, None, :], axis=-1)))
    diag = PropertyResult("diagonal", DIAGONAL_TOL, dev, int(ok.sum()), int((~ok).sum()))

    # reversal: sigma(q, p)(t) = sigma(p, q)(1 - t)
    ok = _covered(planner, P, Q) & _covered(planner, Q, P)
    dev = 0.0
    if ok.any():
        X, _ = planner.paths(P[ok], Q[ok], grid_size)
        Y, _ = planner.paths(Q[ok], P[ok], grid_size)
        dev = float(np.max(sup_distance(m, Y, X[:, ::-1])))
    rev = PropertyResult("reversal", REVERSAL_TOL, dev, int(ok.sum()), int((~ok).sum()))

    # re-evaluation: sigma(sigma(p, q)(t0), q)(t) = sigma(p, q)(t0 + (1 - t0) t)
    ok = _covered(planner, P, Q)
    Pm, Qm, tm = P[ok], Q[ok], t0[ok]
    devs, n_ok, n_bad = [], 0, int((~ok).sum())
    for s in range(0, len(Pm), EVAL_CHUNK):
        p, q, t = Pm[s:s + EVAL_CHUNK], Qm[s:s + EVAL_CHUNK], tm[s:s + EVAL_CHUNK]
        mid, _ = planner.evaluate(p, q, t[:, None])
        mid = mid[:, 0]
        cov = _covered(planner, mid, q)
        n_bad += int((~cov).sum())
        if not cov.any():
            continue
        p, q, t, mid = p[cov], q[cov], t[cov], mid[cov]
        target, _ = planner.evaluate(p, q, t[:, None] + (1.0 - t[:, None]) * grid[None, :])
        again, _ = planner.evaluate(mid, q, grid)
        devs.append(sup_distance(m, again, target))
        n_ok += len(p)
    dev = float(np.max(np.concatenate(devs))) if devs else 0.0
    reev = PropertyResult("reevaluation", REEVALUATION_TOL, dev, n_ok, n_bad)
    return PropertyReport(planner.name, [diag, rev, reev])
