"""
Monte-Carlo audit: is the planner as short as the distance, on average?

Pairs are drawn from the product of Riemannian volumes. The audit reports the
mean planned length, the mean distance, and their paired difference (the
defect) with standard errors. An efficient planner has defect zero up to noise;
a deliberately wasteful planner does not.
"""
import numpy as np

from effplan import LocalSection, MotionPlanner, Sphere, audit, build_planner, geodesic_section

S2 = Sphere(2)

rep = audit(S2, build_planner("sigma0+antipodal", S2), 20_000, grid_size=257, seed=0)
print("composed planner")
print(f"  mean length   {rep.mean_length:.6f} +- {rep.mean_length_se:.1e}")
print(f"  mean distance {rep.mean_distance:.6f} +- {rep.mean_distance_se:.1e}")
print(f"  defect        {rep.defect:.1e} +- {rep.defect_se:.1e}, efficient: {rep.efficient}")
print("  cut-band curve:", [(round(e, 4), f) for e, f, _ in rep.cutband_curve])

# A planner that overshoots to q, comes back halfway and returns: twice the length
base = geodesic_section(S2)


def doubled(P, Q, T):
    s = 2 * T - 1
    return base.section(P, Q, np.where(T <= 0.5, 2 * T, np.where(s <= 0.5, 1 - s, s)))


wasteful = MotionPlanner("doubling", S2, (LocalSection("doubling", base.membership, doubled),))
rep = audit(S2, wasteful, 20_000, grid_size=257, seed=0, epsilons=())
print("\ndoubling planner")
print(f"  defect {rep.defect:.4f} +- {rep.defect_se:.1e}, efficient: {rep.efficient}")
