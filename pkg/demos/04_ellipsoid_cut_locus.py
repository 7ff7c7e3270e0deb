"""
Geodesics on a triaxial ellipsoid, computed numerically.

There is no closed form here: exp integrates the geodesic equation with RK4,
log solves the two-point problem by multi-start damped Newton shooting, and the
cut time along a direction is found from conjugate points (Jacobi fields) and
from the first time the geodesic stops being shortest.
"""
import math

import numpy as np
from scipy import special

from effplan import Ellipsoid, TangentVector, cut_time, distance, exp_map, geodesic, log_map

E = Ellipsoid(1.0, 1.3, 0.8)
rng = np.random.default_rng(4)

# %% exp and log are inverse to each other inside the injectivity radius
p, q = E.sample(rng, 2)
v = log_map(E, p, q)
print("d(p, q)              :", distance(E, p, q))
print("|log_p q|            :", v.norm)
print("|exp_p(log_p q) - q| :", np.linalg.norm(exp_map(E, v) - q))

# %% Speed is conserved along integrated geodesics
sol = geodesic(E, TangentVector(p, 2.0 * v.components / v.norm), grid_size=257)
print("relative speed drift :", sol.speed_drift())

# %% Cut times on a prolate spheroid
S = Ellipsoid(1.0, 1.0, 1.2)
pole = cut_time(S, TangentVector(np.array([0, 0, 1.2]), np.array([1.0, 0, 0])))
print("\nfrom the pole :", pole.cut_time, "half meridian =", 2 * 1.2 * special.ellipe(1 - 1 / 1.44),
      f"({pole.detection})")
eq = cut_time(S, TangentVector(np.array([1.0, 0, 0]), np.array([0, 1.0, 0])))
print("along equator :", eq.cut_time, "pi =", math.pi, f"({eq.detection}, first conjugate at {eq.conjugate_time:.4f})")
