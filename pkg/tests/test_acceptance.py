"""Acceptance suite: one test per criterion, each reporting a single PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""
import json
import math
import os
import sys
import time
from functools import lru_cache

import numpy as np

from effplan import (
    Ellipsoid,
    FlatTorus,
    Hemisphere,
    Sphere,
    TangentVector,
    antipodal_planner_sphere,
    audit,
    away_from_cut,
    build_planner,
    check_properties,
    cutband_measure,
    discontinuity_scan,
    estimate_distance_integral,
    geodesic,
    hemisphere_planners,
)
from effplan.cli import main as cli_main
from effplan.geodesics import exp_batch, log_batch

THREADS = os.cpu_count() or 1
RESULTS = []


def report(number, title, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# -- 1. efficiency chain ---------------------------------------------------------------------

CRITERION1 = (
    ("Sphere(2)", lambda: Sphere(2), "sigma0+antipodal"),
    ("FlatTorus(2)", lambda: FlatTorus(2), "sigma0+torus-tiebreak"),
    ("Hemisphere", Hemisphere, "hemisphere-2"),
)


@lru_cache(maxsize=None)
def efficiency_run(label):
    make, name = {c[0]: c[1:] for c in CRITERION1}[label]
    m = make()
    t0 = time.perf_counter()
    rep = audit(m, build_planner(name, m), 10**5, grid_size=1025, seed=2024, threads=THREADS, epsilons=())
    return rep, time.perf_counter() - t0


def efficiency_ok(rep, seconds):
    return (abs(rep.defect) <= max(1e-4, 3 * rep.defect_se) and rep.max_section0_defect <= 1e-5
            and seconds <= 120.0)


def test_criterion_1_efficiency_chain():
    details, ok = [], True
    for label, _, _ in CRITERION1:
        rep, sec = efficiency_run(label)
        good = efficiency_ok(rep, sec)
        ok &= good
        details.append(f"{label} defect={rep.defect:.2e} (thr {max(1e-4, 3 * rep.defect_se):.1e}) "
                       f"max sec0 l-d={rep.max_section0_defect:.1e} {sec:.0f}s")
    assert report(1, "efficiency chain", ok, "; ".join(details))


# -- 2. cut-band scaling ---------------------------------------------------------------------------

EPS = [0.1, 0.05, 0.025, 0.0125]


def test_criterion_2_cutband_scaling():
    t0 = time.perf_counter()
    sphere = cutband_measure(Sphere(2), EPS, 10**6, seed=7, threads=THREADS)
    torus = cutband_measure(FlatTorus(2), EPS, 10**6, seed=8, threads=THREADS)
    sec = time.perf_counter() - t0
    ratios = {name: [b.fraction / a.fraction for a, b in zip(c, c[1:])]
              for name, c in (("sphere", sphere), ("torus", torus))}
    z = [abs(p.fraction - (1 - math.cos(p.epsilon)) / 2) / p.stderr for p in sphere]
    ok = all(r <= 0.7 for rs in ratios.values() for r in rs) and max(z) <= 3 and sec <= 60
    detail = (f"sphere ratios {np.round(ratios['sphere'], 3).tolist()}, torus ratios "
              f"{np.round(ratios['torus'], 3).tolist()}, sphere vs cap formula max {max(z):.2f} SE, {sec:.0f}s")
    assert report(2, "cut-band scaling", ok, detail)


# -- 3. exp/log oracle equivalence ----------------------------------------------------------------------

def _round_trip_error(m, rng, n=1000):
    want, n = n, (3 * n if isinstance(m, Hemisphere) else n)
    P = m.sample(rng, n)
    U = m.tangent_project(P, rng.standard_normal(P.shape))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    if isinstance(m, FlatTorus):
        cut = math.pi / np.max(np.abs(U), axis=1)
    elif isinstance(m, Ellipsoid):
        cut = np.full(n, m.injectivity_radius_bound())  # lower bound for the cut time
    else:
        cut = np.full(n, math.pi)
    V = U * (0.9 * cut * rng.uniform(0, 1, n))[:, None]
    if isinstance(m, Hemisphere):
        # keep the geodesics whose arc stays in z >= 0
        r = np.outer(np.linalg.norm(V, axis=1), np.linspace(0, 1, 257))
        Z = np.cos(r) * P[:, 2:3] + np.sin(r) * U[:, 2:3]
        keep = np.all(Z >= 0, axis=1)
        P, V = P[keep][:want], V[keep][:want]
    Q = exp_batch(m, P, V)
    return float(np.max(np.linalg.norm(log_batch(m, P, Q) - V, axis=1))), len(P)


def test_criterion_3_exp_log_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(33)
    errs = {}
    for m in (Sphere(2), FlatTorus(2), Hemisphere(), Ellipsoid(1.0, 1.3, 0.8), Ellipsoid(1.0, 1.0, 1.0)):
        errs[repr(m)] = _round_trip_error(m, rng)

    s2, e1 = Sphere(2), Ellipsoid(1.0, 1.0, 1.0)
    P, Q = s2.sample(rng, 1000), s2.sample(rng, 1000)
    keep = s2.distance(P, Q) < math.pi - 1e-2
    V = log_batch(s2, P[keep], Q[keep])
    log_dev = float(np.max(np.abs(log_batch(e1, P[keep], Q[keep]) - V)))
    exp_dev = float(np.max(np.abs(exp_batch(e1, P[keep], V) - Q[keep])))

    drift = 0.0
    for m in (Ellipsoid(1.0, 1.3, 0.8), Ellipsoid(1.0, 2.0, 3.0)):
        Pg = m.sample(rng, 25)
        Vg = m.tangent_project(Pg, rng.standard_normal(Pg.shape)) * 2.0
        for p, v in zip(Pg, Vg):
            drift = max(drift, geodesic(m, TangentVector(p, v), grid_size=257).speed_drift())
    sec = time.perf_counter() - t0
    ok = (all(e <= 1e-6 for e, _ in errs.values()) and log_dev <= 1e-5 and exp_dev <= 1e-5
          and drift <= 1e-6 and sec <= 60)
    worst = max(errs.items(), key=lambda kv: kv[1][0])
    detail = (f"worst round trip {worst[1][0]:.1e} on {worst[0]} "
              f"(n={','.join(str(n) for _, n in errs.values())}); Ellipsoid(1,1,1) vs sphere "
              f"log {log_dev:.1e} exp {exp_dev:.1e}; speed drift {drift:.1e}; {sec:.0f}s")
    assert report(3, "exp/log oracles", ok, detail)


# -- 4. the three properties ----------------------------------------------------------------------------

def test_criterion_4_properties():
    t0 = time.perf_counter()
    sphere = check_properties(Sphere(2), build_planner("sigma0+antipodal", Sphere(2)), 1000, seed=41)
    torus = check_properties(FlatTorus(2), build_planner("sigma0+torus-tiebreak", FlatTorus(2)), 1000, seed=42)
    control = check_properties(Sphere(1), antipodal_planner_sphere(1), 1000, seed=43)
    sec = time.perf_counter() - t0
    ok = sphere.passed and torus.passed and not control["reversal"].passed and sec <= 30
    dev = lambda r: "/".join(f"{x.max_deviation:.0e}" for x in r.results)  # noqa: E731
    detail = (f"sphere {dev(sphere)}, torus {dev(torus)} (diag/rev/reeval); S1 fallback reversal "
              f"deviation {control['reversal'].max_deviation:.3f} (must fail); {sec:.1f}s")
    assert report(4, "three properties", ok, detail)


# -- 5. hemisphere example ----------------------------------------------------------------------------------

def test_criterion_5_hemisphere_example():
    hemi = Hemisphere()
    one, two = hemisphere_planners()
    t0 = time.perf_counter()
    wit = discontinuity_scan(hemi, one, 2000, delta=1e-3, seed=51)
    clean = discontinuity_scan(hemi, two, 2000, delta=1e-3, seed=51, where=away_from_cut(hemi, 0.05))
    sec = time.perf_counter() - t0
    good_wit = [w for w in wit if w.input_separation <= 1e-3 and w.output_separation >= 0.5]
    rep, audit_sec = efficiency_run("Hemisphere")
    ok = bool(good_wit) and not clean and efficiency_ok(rep, audit_sec) and sec <= 60
    best = max((w.output_separation for w in good_wit), default=float("nan"))
    detail = (f"1-domain witnesses {len(good_wit)} (max output sep {best:.3f}); 2-domain witnesses away "
              f"from A {len(clean)}; 2-domain defect {rep.defect:.1e}; scan {sec:.1f}s")
    assert report(5, "hemisphere example", ok, detail)


# -- 6. distance integral ---------------------------------------------------------------------------------------

def test_criterion_6_distance_integral():
    t0 = time.perf_counter()
    parts, ok = [], True
    for label, m in (("S1", Sphere(1)), ("T1", FlatTorus(1)), ("S2", Sphere(2))):
        est = estimate_distance_integral(m, 10**6, seed=61, threads=THREADS)
        z = abs(est.mean - math.pi / 2) / est.stderr
        ok &= z <= 3
        parts.append(f"{label} mean {est.mean:.5f} ({z:.2f} SE)")
    sec = time.perf_counter() - t0
    ok &= sec <= 30
    assert report(6, "distance integral", ok, ", ".join(parts) + f"; {sec:.1f}s")


# -- 7. determinism -------------------------------------------------------------------------------------------------

def test_criterion_7_determinism(tmp_path):
    outs = []
    for label, cfg in (("sphere", {"manifold": {"kind": "sphere", "n": 2}, "planner": "sigma0+antipodal"}),
                       ("hemisphere", {"manifold": {"kind": "hemisphere"}, "planner": "hemisphere-2"})):
        cfg.update(n_pairs=20000, grid_size=257, seed=71, cut_tolerance=1e-6)
        path = tmp_path / f"{label}.json"
        path.write_text(json.dumps(cfg))
        blobs = []
        for i, threads in enumerate((1, 1, THREADS, 3)):
            out = tmp_path / f"{label}-{i}"
            code = cli_main(["audit", "--config", str(path), "--threads", str(threads), "--out", str(out)])
            blobs.append((code, (out / "audit.json").read_bytes() if code == 0 else b""))
        outs.append(all(c == 0 for c, _ in blobs) and len({b for _, b in blobs}) == 1)
    ok = all(outs)
    assert report(7, "determinism", ok, f"audit.json byte-identical over threads 1,1,{THREADS},3: {outs}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
