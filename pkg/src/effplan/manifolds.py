"""
Manifold models: round spheres, flat tori, triaxial ellipsoids and the closed
upper hemisphere.

Spheres, the hemisphere and ellipsoids store points in ambient coordinates
(unit vectors, or vectors on the quadric); flat tori store angle tuples reduced
to [0, 2*pi). All batched methods take arrays of shape (..., k) where k is
``ambient_dim``.

Metric tensors and Christoffel symbols are reported in a chart:

* Sphere(n), Hemisphere: hyperspherical angles, polar angle measured from the
  last ambient axis, so for S^2 the chart is (theta, phi) with z = cos(theta)
  and g = diag(1, sin(theta)**2).
* Ellipsoid: (theta, phi) with x = a sin(theta) cos(phi), y = b sin(theta)
  sin(phi), z = c cos(theta).
* FlatTorus: the angle chart itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, ConstraintViolation

TWO_PI = 2.0 * math.pi

SPHERE_TOL = 1e-12
ELLIPSOID_TOL = 1e-10
HEMISPHERE_Z_TOL = 1e-12


def wrap_angle(x):
    """Reduce angles to [0, 2*pi)."""
    y = np.mod(x, TWO_PI)
    return np.where(y >= TWO_PI, 0.0, y)


def minimal_image(delta):
    """Representative of an angle difference in [-pi, pi)."""
    d = np.mod(np.asarray(delta) + math.pi, TWO_PI) - math.pi
    return np.where(d >= math.pi, d - TWO_PI, d)


def christoffel_from_metric_derivatives(g, dg):
    """Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij).

    ``dg[l, i, j]`` is the partial derivative of ``g[i, j]`` along chart
    coordinate l. Symmetry in (i, j) holds by construction.
    """
    ginv = np.linalg.inv(g)
    # lower[l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
    lower = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    gamma = 0.5 * np.einsum("kl,lij->kij", ginv, lower)
    return 0.5 * (gamma + np.swapaxes(gamma, 1, 2))


def sphere_distance(P, Q):
    """Great-circle distance between unit vectors, accurate at both ends of [0, pi]."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    dot = np.sum(P * Q, axis=-1)
    near = 2.0 * np.arcsin(np.minimum(np.linalg.norm(P - Q, axis=-1) / 2.0, 1.0))
    far = math.pi - 2.0 * np.arcsin(np.minimum(np.linalg.norm(P + Q, axis=-1) / 2.0, 1.0))
    return np.where(dot >= 0.0, near, far)


def _sphere_log(P, Q):
    # (Q - P) projected onto T_P; avoids cancellation in Q - (P.Q) P for nearby points
    D = Q - P
    U = D - np.sum(D * P, axis=-1, keepdims=True) * P
    nu = np.linalg.norm(U, axis=-1, keepdims=True)
    theta = sphere_distance(P, Q)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        V = np.where(nu > 0.0, U * (theta / np.where(nu > 0.0, nu, 1.0)), 0.0)
    return V


def _sphere_exp(P, V, T):
    """exp_P(t V) for every t in T; P, V of shape (B, k), T of shape (B, m)."""
    nv = np.linalg.norm(V, axis=-1)[:, None]
    ang = T * nv
    safe = np.where(nv > 0.0, nv, 1.0)
    sinc = np.where(nv > 0.0, np.sin(ang) / safe, T)
    return np.cos(ang)[..., None] * P[:, None, :] + sinc[..., None] * V[:, None, :]


def _hyperspherical_angles(y):
    """Angles (theta_1..theta_{n-1}, phi) of a unit vector y = (y_0, ..., y_n)."""
    n = y.shape[-1] - 1
    if n == 1:
        return np.array([math.atan2(y[1], y[0])])
    angles = np.empty(n)
    angles[0] = math.acos(max(-1.0, min(1.0, y[0])))
    for k in range(1, n - 1):
        angles[k] = math.atan2(np.linalg.norm(y[k + 1:]), y[k])
    angles[n - 1] = math.atan2(y[n], y[n - 1])
    return angles


def _hyperspherical_metric(angles):
    n = len(angles)
    s2 = np.sin(angles) ** 2
    diag = np.ones(n)
    for k in range(1, n):
        diag[k] = diag[k - 1] * s2[k - 1]
    dg = np.zeros((n, n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = np.cos(angles) / np.sin(angles)
    for k in range(1, n):
        for l in range(k):
            dg[l, k, k] = 2.0 * cot[l] * diag[k]
    return np.diag(diag), dg


class Manifold:
    """Common interface. Subclasses are frozen dataclasses."""

    kind: str
    dim: int
    ambient_dim: int
    has_boundary = False
    representation = "embedded"

    # -- constraints -------------------------------------------------------
    def constraint_residual(self, P):
        raise NotImplementedError

    def contains(self, P, tol=None):
        return np.all(np.asarray(self.constraint_residual(P)) <= (self.tolerance if tol is None else tol))

    def check(self, P, tol=None):
        P = np.asarray(P, dtype=float)
        if P.shape[-1] != self.ambient_dim:
            raise ConstraintViolation(
                f"{self.kind}: expected {self.ambient_dim} coordinates, got {P.shape[-1]}")
        if not np.all(np.isfinite(P)):
            raise ConstraintViolation(f"{self.kind}: non-finite coordinates")
        if not self.contains(P, tol):
            worst = float(np.max(self.constraint_residual(P)))
            raise ConstraintViolation(f"point not on {self.kind} (residual {worst:.3g})")
        return P

    # -- defaults ----------------------------------------------------------
    def project(self, P):
        return np.asarray(P, dtype=float)

    def distance(self, P, Q):
        raise NotImplementedError(f"no closed-form distance on {self.kind}")

    @property
    def has_closed_form(self):
        return True

    def tangent_project(self, P, V):
        return V

    def perturb(self, P, rng, radius):
        """Random points at distance <= radius from each row of P."""
        P = np.asarray(P, dtype=float)
        V = self.tangent_project(P, rng.standard_normal(P.shape))
        nv = np.linalg.norm(V, axis=-1, keepdims=True)
        nv = np.where(nv > 0.0, nv, 1.0)
        r = radius * rng.random(P.shape[:-1] + (1,))
        return self._exp_closed(P, V / nv * r)

    def _exp_closed(self, P, V):
        return _sphere_exp(P, V, np.ones((P.shape[0], 1)))[:, 0]


@dataclass(frozen=True)
class Sphere(Manifold):
    """Unit sphere S^n in R^(n+1)."""

    n: int = 2
    kind = "sphere"
    tolerance = SPHERE_TOL

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"sphere dimension must be a positive integer, got {self.n}")

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n + 1

    def config(self):
        return {"kind": "sphere", "n": self.n}

    @cached_property
    def volume(self):
        k = self.n + 1
        return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)

    @property
    def diameter(self):
        return math.pi

    def constraint_residual(self, P):
        return np.abs(np.linalg.norm(np.asarray(P, dtype=float), axis=-1) - 1.0)

    def project(self, P):
        P = np.asarray(P, dtype=float)
        return P / np.linalg.norm(P, axis=-1, keepdims=True)

    def tangent_project(self, P, V):
        return V - np.sum(V * P, axis=-1, keepdims=True) * P

    def sample(self, rng, size):
        X = rng.standard_normal((size, self.n + 1))
        return X / np.linalg.norm(X, axis=1, keepdims=True)

    def distance(self, P, Q):
        return sphere_distance(P, Q)

    def chart(self, p):
        return _hyperspherical_angles(np.asarray(p, dtype=float)[::-1])

    def metric_and_derivatives(self, p):
        if self.n == 1:
            return np.eye(1), np.zeros((1, 1, 1))
        return _hyperspherical_metric(self.chart(p))

    def cut_gap(self, P, Q):
        """pi - d(p, q): how far q is from the cut point -p."""
        return math.pi - self.distance(P, Q)

    def near_cut_pairs(self, rng, size, radius):
        P = self.sample(rng, size)
        return P, self.perturb(-P, rng, radius)

    def injectivity_radius_bound(self):
        return math.pi


@dataclass(frozen=True)
class Hemisphere(Sphere):
    """Closed upper hemisphere z >= 0 of the unit 2-sphere (a manifold with boundary)."""

    n: int = 2
    kind = "hemisphere"
    has_boundary = True

    def __post_init__(self):
        if self.n != 2:
            raise ConfigError("the hemisphere model is two-dimensional")

    def config(self):
        return {"kind": "hemisphere"}

    @cached_property
    def volume(self):
        return TWO_PI

    def constraint_residual(self, P):
        P = np.asarray(P, dtype=float)
        below = np.maximum(-P[..., 2] - HEMISPHERE_Z_TOL, 0.0)
        return np.maximum(super().constraint_residual(P), np.where(below > 0.0, np.inf, 0.0))

    def sample(self, rng, size):
        X = super().sample(rng, size)
        X[:, 2] = np.abs(X[:, 2])
        return X

    def perturb(self, P, rng, radius):
        # reflection through z = 0 never increases the distance to a point with z >= 0
        X = super().perturb(P, rng, radius)
        X[..., 2] = np.abs(X[..., 2])
        return X

    def boundary_antipodal_pairs(self, rng, size):
        a = rng.uniform(0.0, TWO_PI, size)
        P = np.stack([np.cos(a), np.sin(a), np.zeros(size)], axis=1)
        return P, -P

    def near_cut_pairs(self, rng, size, radius):
        P, Q = self.boundary_antipodal_pairs(rng, size)
        return self.perturb(P, rng, radius), self.perturb(Q, rng, radius)


@dataclass(frozen=True)
class FlatTorus(Manifold):
    """R^n / (2 pi Z)^n with the flat metric, in angle coordinates."""

    n: int = 2
    kind = "torus"
    representation = "chart"
    tolerance = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"torus dimension must be a positive integer, got {self.n}")

    @property
    def dim(self):
        return self.n

    @property
    def ambient_dim(self):
        return self.n

    def config(self):
        return {"kind": "torus", "n": self.n}

    @cached_property
    def volume(self):
        return TWO_PI ** self.n

    @property
    def diameter(self):
        return math.pi * math.sqrt(self.n)

    def constraint_residual(self, P):
        P = np.asarray(P, dtype=float)
        outside = (P < 0.0) | (P >= TWO_PI)
        return np.where(np.any(outside, axis=-1), np.inf, 0.0)

    def project(self, P):
        return wrap_angle(np.asarray(P, dtype=float))

    def sample(self, rng, size):
        return wrap_angle(rng.uniform(0.0, TWO_PI, (size, self.n)))

    def displacement(self, P, Q):
        return minimal_image(np.asarray(Q, dtype=float) - np.asarray(P, dtype=float))

    def _abs_displacement(self, P, Q):
        # built from |q - p| so that d(p, q) == d(q, p) holds bit for bit
        a = np.mod(np.abs(np.asarray(Q, dtype=float) - np.asarray(P, dtype=float)), TWO_PI)
        return np.minimum(a, TWO_PI - a)

    def distance(self, P, Q):
        return np.linalg.norm(self._abs_displacement(P, Q), axis=-1)

    def chart(self, p):
        return np.asarray(p, dtype=float)

    def metric_and_derivatives(self, p):
        return np.eye(self.n), np.zeros((self.n, self.n, self.n))

    def _exp_closed(self, P, V):
        return wrap_angle(P + V)

    def cut_gap(self, P, Q):
        return math.pi - np.max(self._abs_displacement(P, Q), axis=-1)

    def near_cut_pairs(self, rng, size, radius):
        P = self.sample(rng, size)
        D = rng.uniform(-math.pi, math.pi, (size, self.n))
        axis = rng.integers(0, self.n, size)
        D[np.arange(size), axis] = math.pi
        return P, self.perturb(wrap_angle(P + D), rng, radius)

    def injectivity_radius_bound(self):
        return math.pi


@dataclass(frozen=True)
class Ellipsoid(Manifold):
    """Surface x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 with the induced metric."""

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    kind = "ellipsoid"
    tolerance = ELLIPSOID_TOL

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"ellipsoid semi-axis {name} must be a positive real, got {v!r}")

    dim = 2
    ambient_dim = 3

    def config(self):
        return {"kind": "ellipsoid", "a": float(self.a), "b": float(self.b), "c": float(self.c)}

    @property
    def axes(self):
        return np.array([self.a, self.b, self.c], dtype=float)

    @property
    def inv_axes_sq(self):
        return 1.0 / self.axes ** 2

    @property
    def has_closed_form(self):
        return False

    @cached_property
    def volume(self):
        # area = abc * integral over S^2 of sqrt(sum u_i^2 / s_i^2)
        s = self.axes

        def integrand(phi, theta):
            u = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
            return math.sqrt(np.sum(u ** 2 / s ** 2)) * math.sin(theta)

        val, _ = integrate.dblquad(integrand, 0.0, math.pi, 0.0, TWO_PI, epsabs=1e-12, epsrel=1e-12)
        return float(np.prod(s) * val)

    @property
    def diameter(self):
        return math.pi * float(np.max(self.axes))

    def constraint_residual(self, P):
        P = np.asarray(P, dtype=float)
        return np.abs(np.sum(P ** 2 * self.inv_axes_sq, axis=-1) - 1.0)

    def project(self, P):
        P = np.asarray(P, dtype=float)
        return P / np.sqrt(np.sum(P ** 2 * self.inv_axes_sq, axis=-1, keepdims=True))

    def normal(self, P):
        G = np.asarray(P, dtype=float) * self.inv_axes_sq
        return G / np.linalg.norm(G, axis=-1, keepdims=True)

    def tangent_project(self, P, V):
        N = self.normal(P)
        return V - np.sum(V * N, axis=-1, keepdims=True) * N

    def tangent_basis(self, P):
        """Orthonormal tangent frame E of shape (..., 3, 2) at each point."""
        N = self.normal(P)
        idx = np.argmin(np.abs(N), axis=-1)
        A = np.zeros_like(N)
        np.put_along_axis(A, idx[..., None], 1.0, axis=-1)
        E1 = A - np.sum(A * N, axis=-1, keepdims=True) * N
        E1 /= np.linalg.norm(E1, axis=-1, keepdims=True)
        E2 = np.cross(N, E1)
        return np.stack([E1, E2], axis=-1)

    def sample(self, rng, size):
        s = self.axes
        smin = float(np.min(s))
        out = np.empty((size, 3))
        filled = 0
        while filled < size:
            m = max(64, int(1.3 * (size - filled)))
            U = rng.standard_normal((m, 3))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            # area distortion of u -> diag(s) u is abc * sqrt(sum u_i^2 / s_i^2) <= abc / smin
            w = smin * np.sqrt(np.sum(U ** 2 / s ** 2, axis=1))
            keep = U[rng.random(m) < w][: size - filled]
            out[filled:filled + len(keep)] = keep * s
            filled += len(keep)
        return out

    def chart(self, p):
        x, y, z = np.asarray(p, dtype=float)
        theta = math.acos(max(-1.0, min(1.0, z / self.c)))
        phi = math.atan2(y / self.b, x / self.a)
        return np.array([theta, phi])

    def metric_and_derivatives(self, p):
        theta, phi = self.chart(p)
        a, b, c = self.axes
        st, ct, sp, cp = math.sin(theta), math.cos(theta), math.sin(phi), math.cos(phi)
        r_t = np.array([a * ct * cp, b * ct * sp, -c * st])
        r_p = np.array([-a * st * sp, b * st * cp, 0.0])
        r_tt = np.array([-a * st * cp, -b * st * sp, -c * ct])
        r_tp = np.array([-a * ct * sp, b * ct * cp, 0.0])
        r_pp = np.array([-a * st * cp, -b * st * sp, 0.0])
        J = np.stack([r_t, r_p])
        # H[l, i] = d_l d_i r
        H = np.array([[r_tt, r_tp], [r_tp, r_pp]])
        g = J @ J.T
        dg = np.einsum("lix,jx->lij", H, J) + np.einsum("ix,ljx->lij", J, H)
        return g, dg

    def gaussian_curvature(self, P):
        P = np.asarray(P, dtype=float)
        a, b, c = self.axes
        return 1.0 / (a * b * c * np.sum(P ** 2 / self.axes ** 4, axis=-1)) ** 2

    @cached_property
    def curvature_bounds(self):
        """(K_min, K_max); extremes of the Gaussian curvature sit at the vertices."""
        K = self.gaussian_curvature(np.diag(self.axes))
        return float(K.min()), float(K.max())

    def injectivity_radius_bound(self):
        """min(pi / sqrt(K_max), half the shortest principal section).

        A heuristic lower bound (Klingenberg's lemma with the principal
        ellipses taken as the shortest closed geodesics).
        """
        s = np.sort(self.axes)
        perims = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            lo, hi = s[i], s[j]
            perims.append(4.0 * hi * special.ellipe(1.0 - (lo / hi) ** 2))
        return min(math.pi / math.sqrt(self.curvature_bounds[1]), 0.5 * min(perims))

    def perturb(self, P, rng, radius):
        # move along the tangent plane then project; step shrunk so that the
        # intrinsic displacement stays within radius
        P = np.asarray(P, dtype=float)
        V = self.tangent_project(P, rng.standard_normal(P.shape))
        V /= np.linalg.norm(V, axis=-1, keepdims=True)
        r = 0.5 * radius * rng.random(P.shape[:-1] + (1,))
        return self.project(P + r * V)

    def near_cut_pairs(self, rng, size, radius):
        P = self.sample(rng, size)
        return P, self.perturb(-P, rng, radius)


def from_config(cfg):
    """Build a manifold from a config record such as ``{"kind": "sphere", "n": 2}``."""
    if isinstance(cfg, Manifold):
        return cfg
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"manifold config must be a mapping with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    extra = set(cfg) - {"kind"}
    try:
        if kind == "sphere":
            _only(extra, {"n"})
            return Sphere(int(cfg.get("n", 2)))
        if kind == "torus":
            _only(extra, {"n"})
            return FlatTorus(int(cfg.get("n", 2)))
        if kind == "ellipsoid":
            _only(extra, {"a", "b", "c"})
            return Ellipsoid(float(cfg.get("a", 1.0)), float(cfg.get("b", 1.0)), float(cfg.get("c", 1.0)))
        if kind == "hemisphere":
            _only(extra, set())
            return Hemisphere()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad manifold config {cfg!r}: {exc}") from exc
    raise ConfigError(f"unknown manifold kind {kind!r}")


def _only(extra, allowed):
    bad = extra - allowed
    if bad:
        raise ConfigError(f"unexpected manifold config keys: {sorted(bad)}")


# -- operations on single points ------------------------------------------------

def metric_tensor(m: Manifold, p) -> np.ndarray:
    """Metric g(p) in the manifold's chart basis (see module docstring)."""
    p = m.check(p)
    g, _ = m.metric_and_derivatives(p)
    return g


def christoffel(m: Manifold, p) -> np.ndarray:
    """Christoffel symbols ``gamma[k, i, j]`` of the Levi-Civita connection at p."""
    p = m.check(p)
    g, dg = m.metric_and_derivatives(p)
    return christoffel_from_metric_derivatives(g, dg)


def sample_point(m: Manifold, rng: np.random.Generator) -> np.ndarray:
    """One point drawn from the normalized Riemannian volume."""
    return m.sample(rng, 1)[0]


def closed_form_distance(m: Manifold, p, q):
    """Riemannian distance from a closed formula, or None where none exists (Ellipsoid)."""
    p = m.check(p)
    q = m.check(q)
    if not m.has_closed_form:
        return None
    return float(m.distance(p, q))
