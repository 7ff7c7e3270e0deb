"""
The closed upper hemisphere: why one domain is not enough.

Two antipodal points on the boundary circle are joined by two minimal arcs of
length pi (one each way round the boundary) plus every half great circle over
the top. Any planner that always picks a shortest path must choose among them,
and a single continuous choice is impossible. Splitting off the antipodal
boundary pairs as a second domain, and sending those around the boundary in a
fixed orientation, gives an efficient planner that is continuous on each domain.
"""
import numpy as np

from effplan import Hemisphere, audit, away_from_cut, discontinuity_scan, hemisphere_planners, path_length

H = Hemisphere()
one, two = hemisphere_planners()

# %% The boundary antipodal pair (1,0,0), (-1,0,0)
for planner in (one, two):
    path, dom = planner.plan(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))
    print(f"{planner.name}: domain {dom}, length {path_length(path):.6f}, "
          f"midpoint {np.round(path.points[128], 3)}")

# %% The one-domain planner jumps near the antipodal boundary pairs
wit = discontinuity_scan(H, one, 2000, delta=1e-3, seed=0)
best = max(wit, key=lambda w: w.output_separation)
print(f"\none domain: {len(wit)} witnesses, e.g. inputs {best.input_separation:.1e} apart, "
      f"outputs {best.output_separation:.3f} apart")

# %% The two-domain planner shows no jump away from that set
clean = discontinuity_scan(H, two, 2000, delta=1e-3, seed=0, where=away_from_cut(H, 0.05))
print("two domains, away from the antipodal boundary pairs:", len(clean), "witnesses")

# %% And it is efficient
rep = audit(H, two, 20_000, grid_size=257, seed=0)
print(f"\nmean length {rep.mean_length:.6f}, mean distance {rep.mean_distance:.6f}, "
      f"defect {rep.defect:.1e} (efficient: {rep.efficient})")
