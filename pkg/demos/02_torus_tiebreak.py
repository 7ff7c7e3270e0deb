"""
Flat tori: straight lines in the angle chart, and the tie set.

On R^n / (2 pi Z)^n the shortest path from p to q is the straight segment to
the nearest lattice translate of q. When some coordinate difference is exactly
pi two translates are equally near; the tie-break planner always goes in the
positive direction. That choice is efficient but jumps across the tie set.
"""
import math

import numpy as np

from effplan import FlatTorus, build_planner, discontinuity_scan, path_length, torus_tiebreak_planner

T2 = FlatTorus(2)

# %% Distances wrap around
print("d(0.1, 6.2) on the circle:", FlatTorus(1).distance(np.array([0.1]), np.array([6.2])),
      " (2 pi - 6.1 =", 2 * math.pi - 6.1, ")")

# %% Tie-broken paths
planner = torus_tiebreak_planner(2)
for q in ([math.pi, math.pi], [math.pi, 0.5]):
    path, _ = planner.plan(np.zeros(2), np.array(q))
    print(f"(0,0) -> {q}: length {path_length(path):.6f}, midpoint {np.round(path.points[128], 4)}")

# %% Composing with the geodesic planner leaves the tie set to the fallback
composed = build_planner("sigma0+torus-tiebreak", T2)
rng = np.random.default_rng(1)
P, Q = T2.sample(rng, 50_000), T2.sample(rng, 50_000)
ids = composed.dispatch(P, Q)
print("\ndomain usage:", np.bincount(ids, minlength=2))

# %% Nearby inputs on either side of the tie set give very different paths
witnesses = discontinuity_scan(FlatTorus(1), torus_tiebreak_planner(1), 2000, delta=1e-3, seed=0)
w = max(witnesses, key=lambda w: w.output_separation)
print(f"\n{len(witnesses)} discontinuity witnesses on the circle; worst pair is "
      f"{w.input_separation:.1e} apart at the input, {w.output_separation:.3f} apart at the output")
