"""
Exponential map, Riemannian logarithm and cut-locus estimation.

Closed forms are used on spheres, the hemisphere and flat tori; on ellipsoids
the exponential map is integrated (see ``_ellipsoid``) and the logarithm is
found by multi-start Newton shooting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _ellipsoid
from .errors import ConstraintViolation, CutLocus, LeftManifold
from .manifolds import (
    Ellipsoid,
    FlatTorus,
    Hemisphere,
    Manifold,
    Sphere,
    _sphere_exp,
    _sphere_log,
    wrap_angle,
)

DEFAULT_CUT_TOL = 1e-6
TANGENT_TOL = 1e-10


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))


@dataclass(frozen=True)
class GeodesicSolution:
    """Samples of t -> exp_p(t v) on a uniform grid of [0, 1]."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    initial: TangentVector

    @property
    def grid_size(self):
        return len(self.t)

    def speed_drift(self):
        speeds = np.linalg.norm(self.velocities, axis=1)
        s0 = self.initial.norm
        if s0 == 0.0:
            return float(np.max(speeds))
        return float(np.max(np.abs(speeds - s0)) / s0)


@dataclass(frozen=True)
class CutProbe:
    direction: TangentVector
    cut_time: float
    conjugate_time: float
    detection: str  # "conjugate", "minimality" or "none"


def check_tangent(m: Manifold, v: TangentVector):
    base = m.check(v.base)
    comp = np.asarray(v.components, dtype=float)
    if comp.shape != base.shape:
        raise ConstraintViolation("tangent components and base point differ in shape")
    if isinstance(m, Sphere):
        if abs(float(comp @ base)) > TANGENT_TOL * max(1.0, np.linalg.norm(comp)):
            raise ConstraintViolation("vector is not tangent to the sphere at its base")
    elif isinstance(m, Ellipsoid):
        n = m.normal(base)
        if abs(float(comp @ n)) > TANGENT_TOL * max(1.0, np.linalg.norm(comp)):
            raise ConstraintViolation("vector is not tangent to the ellipsoid at its base")
    return base, comp


def _grid_times(T, B):
    T = np.asarray(T, dtype=float)
    if T.ndim == 0:
        return np.full((B, 1), float(T))
    if T.ndim == 1:
        return np.broadcast_to(T, (B, len(T)))
    return T


def exp_batch(m: Manifold, P, V, T=1.0):
    """exp_P(t V) for every row and every t; T is a scalar, (m,) or (B, m).

    Returns (B, k) for scalar T, otherwise (B, m, k).
    """
    P = np.asarray(P, dtype=float)
    V = np.asarray(V, dtype=float)
    scalar = np.ndim(T) == 0
    TT = _grid_times(T, len(P))
    if isinstance(m, FlatTorus):
        out = wrap_angle(P[:, None, :] + TT[..., None] * V[:, None, :])
    elif isinstance(m, Sphere):
        out = _sphere_exp(P, V, TT)
        if isinstance(m, Hemisphere):
            _check_hemisphere_arc(P, V, TT)
    elif isinstance(m, Ellipsoid):
        B, mt = TT.shape
        Pr = np.repeat(P, mt, axis=0)
        Vr = np.repeat(V, mt, axis=0) * TT.reshape(-1, 1)
        X, _ = _ellipsoid.endpoint(m, Pr, Vr)
        # t = 0 must return the base point untouched
        X = np.where(TT.reshape(-1, 1) == 0.0, Pr, X)
        out = X.reshape(B, mt, 3)
    else:
        raise TypeError(f"unsupported manifold {m!r}")
    return out[:, 0] if scalar else out


def _check_hemisphere_arc(P, V, TT):
    # z along the great circle on [0, t_max], checked on a fine grid of each arc
    tmax = np.max(TT, axis=1, initial=0.0)
    s = np.linspace(0.0, 1.0, 257)[None, :] * tmax[:, None]
    Z = _sphere_exp(P, V, s)[..., 2]
    if np.any(Z < -1e-12):
        raise LeftManifold("geodesic leaves the closed upper hemisphere")


def exp_map(m: Manifold, v: TangentVector, t: float = 1.0) -> np.ndarray:
    """exp_p(t v) with p = v.base."""
    base, comp = check_tangent(m, v)
    if not np.any(comp):
        return base.copy()
    return exp_batch(m, base[None], comp[None], float(t))[0]


def geodesic(m: Manifold, v: TangentVector, grid_size: int = 65) -> GeodesicSolution:
    """Sample the geodesic t -> exp_p(t v), t in [0, 1], with velocities."""
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    base, comp = check_tangent(m, v)
    t = np.linspace(0.0, 1.0, grid_size)
    if isinstance(m, Ellipsoid):
        X, U, _, _ = _ellipsoid.integrate(m, base[None], comp[None], 1.0, grid_size)
        X = m.project(X[0])
        X[0] = base
        U = U[0]
    elif isinstance(m, FlatTorus):
        X = exp_batch(m, base[None], comp[None], t)[0]
        U = np.broadcast_to(comp, X.shape).copy()
    else:
        X = exp_batch(m, base[None], comp[None], t)[0]
        nv = np.linalg.norm(comp)
        if nv == 0.0:
            U = np.zeros_like(X)
        else:
            u = comp / nv
            U = nv * (-np.sin(t * nv)[:, None] * base + np.cos(t * nv)[:, None] * u)
    return GeodesicSolution(t, X, U, TangentVector(base, comp))


def log_batch(m: Manifold, P, Q, tol: float = DEFAULT_CUT_TOL):
    """Initial velocities of the unique minimal geodesics P -> Q (row-wise).

    Raises CutLocus if any Q is within ``tol`` of the cut locus of its P.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if isinstance(m, FlatTorus):
        D = m.displacement(P, Q)
        if np.any(np.abs(D) >= math.pi - tol):
            raise CutLocus("a coordinate difference is within tolerance of pi")
        return D
    if isinstance(m, Sphere):
        if np.any(m.distance(P, Q) >= math.pi - tol):
            raise CutLocus("target is within tolerance of the antipode")
        return _sphere_log(P, Q)
    if isinstance(m, Ellipsoid):
        return _ellipsoid.log_batch(m, P, Q, tol)
    raise TypeError(f"unsupported manifold {m!r}")


def log_map(m: Manifold, p, q, tol: float = DEFAULT_CUT_TOL) -> TangentVector:
    """The tangent vector v at p with exp_p(v) = q and |v| = d(p, q)."""
    p = m.check(p)
    q = m.check(q)
    if np.array_equal(p, q):
        return TangentVector(p, np.zeros_like(p))
    return TangentVector(p, log_batch(m, p[None], q[None], tol)[0])


def distance_batch(m: Manifold, P, Q):
    """Riemannian distance; shooting-based on ellipsoids."""
    if m.has_closed_form:
        return m.distance(P, Q)
    _, L, _, _, _ = _ellipsoid.shortest(m, np.asarray(P, float), np.asarray(Q, float))
    return L


def distance(m: Manifold, p, q) -> float:
    p = m.check(p)
    q = m.check(q)
    if np.array_equal(p, q):
        return 0.0
    return float(distance_batch(m, p[None], q[None])[0])


# -- cut locus -------------------------------------------------------------------------

def cut_time(m: Manifold, v: TangentVector) -> CutProbe:
    """Cut time (and first conjugate time) along the unit-speed geodesic with direction v."""
    base, comp = check_tangent(m, v)
    if abs(np.linalg.norm(comp) - 1.0) > 1e-9:
        raise ValueError("cut_time needs a unit tangent vector")
    if isinstance(m, Sphere):
        return CutProbe(v, math.pi, math.pi, "conjugate")
    if isinstance(m, FlatTorus):
        # the line stops minimizing when t v leaves the cube [-pi, pi]^n
        return CutProbe(v, math.pi / float(np.max(np.abs(comp))), math.inf, "minimality")
    if isinstance(m, Ellipsoid):
        return _ellipsoid_cut_probe(m, v, base, comp)
    raise TypeError(f"unsupported manifold {m!r}")


def conjugate_time(m: Ellipsoid, base, direction, horizon=None, tol=1e-6):
    """First zero of the normal Jacobi field along t -> exp(t * direction).

    By comparison with the constant-curvature case a conjugate point occurs
    before pi / sqrt(K_min), which bounds the search.
    """
    kmin, _ = m.curvature_bounds
    if horizon is None:
        horizon = 1.02 * math.pi / math.sqrt(kmin)
    N0 = m.normal(base)
    w = np.cross(N0, direction)
    n_steps = int(math.ceil(_ellipsoid.STEPS_PER_UNIT * horizon))
    X, U, DX, DU = _ellipsoid.integrate(
        m, base[None], direction[None], horizon, n_steps + 1, variations=w[None, :, None])
    X, U, DX, DU = X[0], U[0], DX[0, :, :, 0], DU[0, :, :, 0]
    jac = _jacobi_det(m, X, U, DX)
    h = horizon / n_steps
    hits = np.flatnonzero((jac[1:-1] > 0.0) & (jac[2:] <= 0.0))
    if len(hits) == 0:
        return math.inf
    i = int(hits[0]) + 1
    lo, hi = 0.0, h
    y = (X[i], U[i], DX[i], DU[i])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _jacobi_det_from(m, y, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return i * h + 0.5 * (lo + hi)


def _jacobi_det(m, X, U, DX):
    N = m.normal(X)
    return np.einsum("ti,ti->t", DX, np.cross(N, U))


def _jacobi_det_from(m, state, dt):
    # one RK4 step of length dt <= h from a stored (x, u, J, J') state
    X, U, DX, DU = state
    Y0 = np.concatenate([X, U, DX, DU])[None]
    Y = _ellipsoid._integrate(Y0, m.inv_axes_sq, 1, float(dt), 2, np.ones(1, dtype=np.int64))
    Xe, Ue, DXe, _ = _ellipsoid.unpack(Y[0, -1], 1)
    return float(_jacobi_det(m, Xe[None], Ue[None], DXe[:, 0][None])[0])


MINIMALITY_SLACK = 1e-7


def _is_not_minimizing(m, base, direction, t):
    """True if some shooting solution reaches exp(t * direction) in length < t - slack."""
    target = exp_batch(m, base[None], (t * direction)[None], 1.0)
    V, res, _ = _ellipsoid.shoot_candidates(m, base[None], target)
    lengths = np.linalg.norm(V[0], axis=1)
    ok = res[0] <= _ellipsoid.RESIDUAL_TOL
    return bool(np.any(ok & (lengths < t - MINIMALITY_SLACK)))


def _ellipsoid_cut_probe(m, v, base, comp, tol=1e-6, n_scan=16):
    conj = conjugate_time(m, base, comp, tol=tol)
    upper = conj if math.isfinite(conj) else 1.02 * math.pi / math.sqrt(m.curvature_bounds[0])
    grid = upper * np.arange(1, n_scan + 1) / n_scan
    prev = 0.0
    for t in grid:
        if _is_not_minimizing(m, base, comp, t):
            lo, hi = prev, t
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _is_not_minimizing(m, base, comp, mid):
                    hi = mid
                else:
                    lo = mid
            tc = 0.5 * (lo + hi)
            if tc < conj - tol:
                return CutProbe(v, tc, conj, "minimality")
            break
        prev = t
    if math.isfinite(conj):
        return CutProbe(v, conj, conj, "conjugate")
    return CutProbe(v, math.inf, math.inf, "none")


def cut_gap_batch(m: Manifold, P, Q, tol: float = DEFAULT_CUT_TOL):
    """cut_time(direction of the minimal geodesic) - d(p, q), row-wise.

    ``in_cut_locus(p, q, eps)`` holds exactly when the gap is <= eps. On
    ellipsoids each row needs a full cut-time probe and is slow.
    """
    if not isinstance(m, Ellipsoid):
        return m.cut_gap(P, Q)
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    out = np.empty(len(P))
    for i in range(len(P)):
        if np.array_equal(P[i], Q[i]):
            out[i] = math.inf
            continue
        try:
            V = _ellipsoid.log_batch(m, P[i:i + 1], Q[i:i + 1], tol)[0]
        except CutLocus:
            out[i] = 0.0
            continue
        L = float(np.linalg.norm(V))
        probe = cut_time(m, TangentVector(P[i], V / L))
        out[i] = probe.cut_time - L
    return out


def in_cut_locus(m: Manifold, p, q, tol: float = DEFAULT_CUT_TOL) -> bool:
    """Whether d(p, q) >= cut_time(direction of the minimal geodesic) - tol."""
    p = m.check(p)
    q = m.check(q)
    if np.array_equal(p, q):
        return False
    return bool(cut_gap_batch(m, p[None], q[None], tol)[0] <= tol)
