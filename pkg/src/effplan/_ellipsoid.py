"""
Geodesics on a triaxial ellipsoid by RK4 in ambient coordinates.

For the quadric F(x) = sum x_i^2 / s_i^2 - 1 the geodesic equation is

    x'' = -(u^T D u) / (x^T D^2 x) * D x,      D = diag(1 / s_i^2),

i.e. the tangential part of the acceleration vanishes; in the (theta, phi)
chart this is the usual equation with Christoffel symbols, but the ambient
form has no pole singularity. The linearised (variational) system is carried
along to provide Jacobi fields: with dx(0) = 0, du(0) = w, dx(t) is the
Jacobi field J_w(t), and dx(1) is d exp_p(v)[w].
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import IntegrationFailure, NoConvergence

STEPS_PER_UNIT = 256
SPEED_DRIFT_TOL = 1e-8
MAX_HALVINGS = 6


@njit(cache=True)
def _rhs(y, d, k, out):
    g0 = d[0] * y[0]
    g1 = d[1] * y[1]
    g2 = d[2] * y[2]
    s = d[0] * y[3] * y[3] + d[1] * y[4] * y[4] + d[2] * y[5] * y[5]
    r = g0 * g0 + g1 * g1 + g2 * g2
    sr = s / r
    out[0] = y[3]
    out[1] = y[4]
    out[2] = y[5]
    out[3] = -sr * g0
    out[4] = -sr * g1
    out[5] = -sr * g2
    ox = 6
    ou = 6 + 3 * k
    for j in range(k):
        gdx = 0.0
        udu = 0.0
        for i in range(3):
            gdx += d[i] * y[i] * d[i] * y[ox + i * k + j]
            udu += d[i] * y[3 + i] * y[ou + i * k + j]
        c1 = 2.0 * s / (r * r) * gdx - 2.0 * udu / r
        out[ox + 0 * k + j] = y[ou + 0 * k + j]
        out[ox + 1 * k + j] = y[ou + 1 * k + j]
        out[ox + 2 * k + j] = y[ou + 2 * k + j]
        out[ou + 0 * k + j] = -sr * d[0] * y[ox + 0 * k + j] + c1 * g0
        out[ou + 1 * k + j] = -sr * d[1] * y[ox + 1 * k + j] + c1 * g1
        out[ou + 2 * k + j] = -sr * d[2] * y[ox + 2 * k + j] + c1 * g2


@njit(cache=True)
def _integrate(y0, d, k, t_end, n_grid, sub):
    """RK4 over [0, t_end] for each row of y0; returns states on a uniform grid.

    ``sub[b]`` RK4 steps are taken per grid interval for row b.
    """
    B, w = y0.shape
    out = np.empty((B, n_grid, w))
    k1 = np.empty(w)
    k2 = np.empty(w)
    k3 = np.empty(w)
    k4 = np.empty(w)
    tmp = np.empty(w)
    for b in range(B):
        y = y0[b].copy()
        out[b, 0] = y
        n_steps = (n_grid - 1) * sub[b]
        if n_steps == 0:
            continue
        h = t_end / n_steps
        for s in range(n_steps):
            _rhs(y, d, k, k1)
            for i in range(w):
                tmp[i] = y[i] + 0.5 * h * k1[i]
            _rhs(tmp, d, k, k2)
            for i in range(w):
                tmp[i] = y[i] + 0.5 * h * k2[i]
            _rhs(tmp, d, k, k3)
            for i in range(w):
                tmp[i] = y[i] + h * k3[i]
            _rhs(tmp, d, k, k4)
            for i in range(w):
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if (s + 1) % sub[b] == 0:
                out[b, (s + 1) // sub[b]] = y
    return out


def pack(X, U, DX=None, DU=None):
    B = X.shape[0]
    if DX is None:
        return np.concatenate([X, U], axis=1), 0
    k = DX.shape[2]
    return np.concatenate([X, U, DX.reshape(B, 3 * k), DU.reshape(B, 3 * k)], axis=1), k


def unpack(Y, k):
    X = Y[..., 0:3]
    U = Y[..., 3:6]
    if k == 0:
        return X, U, None, None
    shape = Y.shape[:-1] + (3, k)
    DX = Y[..., 6:6 + 3 * k].reshape(shape)
    DU = Y[..., 6 + 3 * k:6 + 6 * k].reshape(shape)
    return X, U, DX, DU


def integrate(m, X0, U0, t_end=1.0, n_grid=2, variations=None):
    """Integrate geodesics with initial positions X0 and velocities U0 over [0, t_end].

    Returns (X, U, DX, DU) sampled on ``n_grid`` uniform times; DX/DU are None
    unless ``variations`` (initial du, shape (B, 3, k)) is given. The step is
    1/256 per unit arclength and is halved for rows whose speed drift exceeds
    1e-8 (relative).
    """
    X0 = np.ascontiguousarray(X0, dtype=float)
    U0 = np.ascontiguousarray(U0, dtype=float)
    B = X0.shape[0]
    if variations is None:
        Y0, k = pack(X0, U0)
    else:
        W = np.asarray(variations, dtype=float)
        Y0, k = pack(X0, U0, np.zeros_like(W), W)
    d = m.inv_axes_sq
    speed0 = np.linalg.norm(U0, axis=1)
    arclen = speed0 * abs(t_end)
    per_interval = np.ceil(STEPS_PER_UNIT * arclen / (n_grid - 1)).astype(np.int64)
    sub = np.maximum(per_interval, 1)
    Y = np.empty((B, n_grid, Y0.shape[1]))
    todo = np.arange(B)
    for _ in range(MAX_HALVINGS + 1):
        Yt = _integrate(np.ascontiguousarray(Y0[todo]), d, k, float(t_end), n_grid, sub[todo])
        Y[todo] = Yt
        speed = np.linalg.norm(Yt[:, :, 3:6], axis=2)
        ref = np.where(speed0[todo] > 0.0, speed0[todo], 1.0)
        drift = np.max(np.abs(speed - speed0[todo, None]), axis=1) / ref
        bad = drift > SPEED_DRIFT_TOL
        if not bad.any():
            return unpack(Y, k)
        todo = todo[bad]
        sub[todo] *= 2
    raise IntegrationFailure(
        f"speed drift {float(drift.max()):.3g} above {SPEED_DRIFT_TOL} after {MAX_HALVINGS} halvings")


def endpoint(m, P, V, with_jacobian=False, E=None):
    """exp_P(V) projected onto the surface, optionally with d exp_P(V) in the frame E."""
    if with_jacobian:
        X, U, DX, _ = integrate(m, P, V, 1.0, 2, variations=E)
        return m.project(X[:, -1]), DX[:, -1]
    X, U, _, _ = integrate(m, P, V, 1.0, 2)
    return m.project(X[:, -1]), None


# -- shooting ---------------------------------------------------------------------

N_STARTS = 8
MAX_NEWTON = 50
RESIDUAL_TOL = 1e-8
NEWTON_TARGET = 1e-12
MAX_STEP = 1.0


def warm_start(m, P, Q):
    """Pull back the round-sphere logarithm through x -> diag(a, b, c) x."""
    s = m.axes
    Ph = P / s
    Qh = Q / s
    Ph /= np.linalg.norm(Ph, axis=-1, keepdims=True)
    Qh /= np.linalg.norm(Qh, axis=-1, keepdims=True)
    D = Qh - Ph
    W = D - np.sum(D * Ph, axis=-1, keepdims=True) * Ph
    nw = np.linalg.norm(W, axis=-1, keepdims=True)
    dot = np.clip(np.sum(Ph * Qh, axis=-1, keepdims=True), -1.0, 1.0)
    ang = np.arctan2(np.linalg.norm(np.cross(Ph, Qh), axis=-1, keepdims=True), dot)
    # exactly antipodal on the reference sphere: any direction is as good as another
    E = m.tangent_basis(P)
    W = np.where(nw > 1e-300, W, E[..., 0])
    nw = np.where(nw > 1e-300, nw, 1.0)
    V = (W / nw * ang) * s
    return m.tangent_project(P, V)


def start_vectors(m, P, Q):
    """Eight initial guesses per pair: warm start, rotations, rescalings, the long way round."""
    V0 = warm_start(m, P, Q)
    E = m.tangent_basis(P)
    c = np.einsum("bij,bi->bj", E, V0)
    L = np.linalg.norm(c, axis=1)
    base_ang = np.arctan2(c[:, 1], c[:, 0])
    r_mean = float(np.mean(m.axes))
    circ = 2.0 * math.pi * r_mean
    specs = [(0.0, 1.0), (math.pi / 6, 1.0), (-math.pi / 6, 1.0), (math.pi / 3, 1.0),
             (-math.pi / 3, 1.0), (0.0, 0.8), (0.0, 1.2)]
    starts = []
    for dang, scale in specs:
        ang = base_ang + dang
        length = scale * L
        starts.append(np.stack([np.cos(ang), np.sin(ang)], axis=1) * length[:, None])
    ang = base_ang + math.pi
    length = np.maximum(circ - L, 0.0)
    starts.append(np.stack([np.cos(ang), np.sin(ang)], axis=1) * length[:, None])
    return np.stack(starts, axis=1), E  # (B, 8, 2), (B, 3, 2)


def newton_shoot(m, P, Q, C0, E, max_iter=MAX_NEWTON):
    """Damped Gauss-Newton on exp_P(E c) - Q = 0 for every row.

    Returns tangent coordinates c, residual norms and the 3x2 Jacobians at c.
    """
    C = np.array(C0, dtype=float)
    max_len = 2.0 * math.pi * float(np.max(m.axes))
    X1, J = endpoint(m, P, np.einsum("bij,bj->bi", E, C), True, E)
    R = X1 - Q
    res = np.linalg.norm(R, axis=1)
    lam = np.ones(len(C))
    stalled = np.zeros(len(C), dtype=bool)
    for _ in range(max_iter):
        active = (res > NEWTON_TARGET) & ~stalled
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Ja = J[idx]
        JtJ = np.einsum("bki,bkj->bij", Ja, Ja)
        Jtr = np.einsum("bki,bk->bi", Ja, R[idx])
        det = JtJ[:, 0, 0] * JtJ[:, 1, 1] - JtJ[:, 0, 1] * JtJ[:, 1, 0]
        ok = np.abs(det) > 1e-300
        step = np.zeros((len(idx), 2))
        inv = np.stack([np.stack([JtJ[:, 1, 1], -JtJ[:, 0, 1]], -1),
                        np.stack([-JtJ[:, 1, 0], JtJ[:, 0, 0]], -1)], 1)
        step[ok] = -np.einsum("bij,bj->bi", inv[ok], Jtr[ok]) / det[ok, None]
        # trust region: Newton steps far from the solution can be enormous
        sn = np.linalg.norm(step, axis=1, keepdims=True)
        step = np.where(sn > MAX_STEP, step * (MAX_STEP / np.maximum(sn, 1e-300)), step)
        Cn = C[idx] + lam[idx, None] * step
        too_long = np.linalg.norm(Cn, axis=1) > max_len
        Cn[too_long] = C[idx][too_long]
        Xn, Jn = endpoint(m, P[idx], np.einsum("bij,bj->bi", E[idx], Cn), True, E[idx])
        Rn = Xn - Q[idx]
        rn = np.linalg.norm(Rn, axis=1)
        better = (rn < res[idx]) & ~too_long
        acc = idx[better]
        C[acc] = Cn[better]
        R[acc] = Rn[better]
        res[acc] = rn[better]
        J[acc] = Jn[better]
        lam[acc] = np.minimum(1.0, 2.0 * lam[acc])
        rej = idx[~better]
        lam[rej] *= 0.5
        stalled |= lam < 1e-8
        # no further progress possible once the residual sits at rounding level
        stalled[rej] |= res[rej] <= 1e-13
    return C, res, J


def shoot_candidates(m, P, Q):
    """All multi-start solutions: tangent vectors (B, 8, 3), residuals (B, 8), Jacobians."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    B = len(P)
    C0, E = start_vectors(m, P, Q)
    S = C0.shape[1]
    Pr = np.repeat(P, S, axis=0)
    Qr = np.repeat(Q, S, axis=0)
    Er = np.repeat(E, S, axis=0)
    C, res, J = newton_shoot(m, Pr, Qr, C0.reshape(B * S, 2), Er)
    V = np.einsum("bij,bj->bi", Er, C)
    return V.reshape(B, S, 3), res.reshape(B, S), J.reshape(B, S, 3, 2)


def shortest(m, P, Q):
    """Minimal-length converged shooting solution per pair.

    Returns (V, lengths, ambiguous, conj_measure, best_residual): ``ambiguous``
    flags a second, distinct solution of (nearly) the same length and
    ``conj_measure`` is sigma_min(d exp) * |v|, which vanishes at conjugate points.
    """
    V, res, J = shoot_candidates(m, P, Q)
    lengths = np.linalg.norm(V, axis=2)
    conv = res <= RESIDUAL_TOL
    masked = np.where(conv, lengths, np.inf)
    best = np.argmin(masked, axis=1)
    rows = np.arange(len(P))
    Vb = V[rows, best]
    Lb = masked[rows, best]
    diff = np.linalg.norm(V - Vb[:, None, :], axis=2)
    gap = masked - Lb[:, None]
    distinct = conv & (diff > 1e-5 * np.maximum(1.0, Lb[:, None]))
    smin = np.linalg.svd(J[rows, best], compute_uv=False)[:, -1]
    # only meaningful well past the base point, where d exp has shrunk
    conj = np.where(smin < 0.5, smin * Lb, np.inf)
    return Vb, Lb, (distinct, gap), conj, np.min(res, axis=1)


def log_batch(m, P, Q, tol):
    from .errors import CutLocus

    Vb, Lb, (distinct, gap), conj, best_res = shortest(m, P, Q)
    if not np.all(np.isfinite(Lb)):
        i = int(np.flatnonzero(~np.isfinite(Lb))[0])
        raise NoConvergence(f"shooting failed from all {N_STARTS} starts", float(best_res[i]))
    ambiguous = np.any(distinct & (gap <= tol), axis=1) | (conj <= tol)
    if ambiguous.any():
        raise CutLocus("target is on the cut locus within tolerance: minimal geodesic not unique")
    return Vb
