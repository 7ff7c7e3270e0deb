import csv
import json
import math
import subprocess
import sys

import pytest

from effplan.cli import main


def write_config(tmp_path, **overrides):
    cfg = {"manifold": {"kind": "sphere", "n": 2}, "planner": "sigma0+antipodal", "n_pairs": 2048,
           "grid_size": 65, "seed": 5, "cut_tolerance": 1e-6, "output_dir": str(tmp_path / "out")}
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_audit_writes_report(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["audit", "--config", cfg, "--threads", "1"]) == 0
    rep = json.loads((tmp_path / "out" / "audit.json").read_text())
    assert rep["schema"] == 1
    assert abs(rep["defect"]) <= 1e-4 + 3 * rep["defect_se"]
    assert rep["efficient"] is True
    assert sum(rep["domain_histogram"].values()) == 2048


def test_audit_hemisphere_two_domain(tmp_path):
    cfg = write_config(tmp_path, manifold={"kind": "hemisphere"}, planner="hemisphere-2")
    assert main(["audit", "--config", cfg]) == 0
    rep = json.loads((tmp_path / "out" / "audit.json").read_text())
    assert abs(rep["defect"]) <= 1e-4 + 3 * rep["defect_se"]


def test_audit_identical_across_threads(tmp_path):
    cfg = write_config(tmp_path, manifold={"kind": "torus", "n": 2}, planner="sigma0+torus-tiebreak")
    assert main(["audit", "--config", cfg, "--threads", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(["audit", "--config", cfg, "--threads", "4", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "audit.json").read_bytes() == (tmp_path / "b" / "audit.json").read_bytes()


def test_flags_override_config(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["audit", "--config", cfg, "--pairs", "1024", "--seed", "9", "--grid", "129"]) == 0
    rep = json.loads((tmp_path / "out" / "audit.json").read_text())
    assert (rep["n_pairs"], rep["seed"], rep["grid_size"]) == (1024, 9, 129)


def test_floats_use_17_digits(tmp_path):
    cfg = write_config(tmp_path)
    main(["audit", "--config", cfg])
    text = (tmp_path / "out" / "audit.json").read_text()
    assert '"cut_tolerance": 9.9999999999999995e-07' in text


@pytest.mark.parametrize("override", [
    {"planner": "no-such-planner"},
    {"n_pairs": 999},
    {"grid_size": 100},
    {"grid_size": 33},
    {"cut_tolerance": 0.0},
    {"cut_tolerance": 0.2},
    {"manifold": {"kind": "klein-bottle"}},
    {"unknown_key": 1},
])
def test_config_errors_exit_3(tmp_path, capsys, override):
    cfg = write_config(tmp_path, **override)
    assert main(["audit", "--config", cfg]) == 3
    assert "effplan:" in capsys.readouterr().err


def test_cli_usage_errors_exit_3(tmp_path):
    assert main([]) == 3
    assert main(["audit", "--bogus"]) == 3
    assert main(["audit", "--config", str(tmp_path / "missing.json")]) == 3
    assert main(["audit", "--threads", "0"]) == 3


def test_properties(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["properties", "--config", cfg]) == 0
    rep = json.loads((tmp_path / "out" / "properties.json").read_text())
    assert rep["passed"]
    assert {p["name"] for p in rep["properties"]} == {"diagonal", "reversal", "reevaluation"}


def test_properties_torus(tmp_path):
    cfg = write_config(tmp_path, manifold={"kind": "torus", "n": 2}, planner="sigma0+torus-tiebreak")
    assert main(["properties", "--config", cfg]) == 0


def test_properties_negative_control_exit_2(tmp_path):
    cfg = write_config(tmp_path, manifold={"kind": "sphere", "n": 1}, planner="antipodal")
    assert main(["properties", "--config", cfg]) == 2
    rep = json.loads((tmp_path / "out" / "properties.json").read_text())
    reversal = [p for p in rep["properties"] if p["name"] == "reversal"][0]
    assert not reversal["passed"]


def test_cutband_csv(tmp_path):
    cfg = write_config(tmp_path, n_pairs=10**5)
    assert main(["cutband", "--config", cfg, "--epsilons", "0.1,0.05,0.025"]) == 0
    rows = read_csv(tmp_path / "out" / "cutband.csv")
    assert rows[0] == ["epsilon", "fraction"]
    assert len(rows) == 4
    for eps, frac in rows[1:]:
        p = (1 - math.cos(float(eps))) / 2
        assert abs(float(frac) - p) <= 3 * math.sqrt(p * (1 - p) / 10**5)


def test_cutband_single_and_bad_epsilons(tmp_path):
    cfg = write_config(tmp_path, manifold={"kind": "torus", "n": 2}, planner="sigma0+torus-tiebreak")
    assert main(["cutband", "--config", cfg, "--epsilons", "0.1"]) == 0
    assert len(read_csv(tmp_path / "out" / "cutband.csv")) == 2
    assert main(["cutband", "--config", cfg, "--epsilons", "0.01,0.1"]) == 3
    assert main(["cutband", "--config", cfg, "--epsilons", "a,b"]) == 3


def test_path_quarter_circle(tmp_path, capsys):
    cfg = write_config(tmp_path, grid_size=257)
    assert main(["path", "--config", cfg, "--p", "1,0,0", "--q", "0,1,0"]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert float(out["length"]) == pytest.approx(math.pi / 2, abs=1e-6)
    assert float(out["distance"]) == pytest.approx(math.pi / 2, abs=1e-12)
    assert out["domain"] == "0"
    rows = read_csv(tmp_path / "out" / "path.csv")
    assert rows[0] == ["t", "x1", "x2", "x3"]
    assert len(rows) == 258


def test_path_antipodes_and_diagonal(tmp_path, capsys):
    cfg = write_config(tmp_path, grid_size=257)
    assert main(["path", "--config", cfg, "--p", "1,0,0", "--q", "-1,0,0"]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.splitlines())
    assert out["domain"] == "1"
    assert float(out["length"]) == pytest.approx(math.pi, abs=1e-6)

    assert main(["path", "--config", cfg, "--p", "0,0.6,0.8", "--q", "0,0.6,0.8"]) == 0
    rows = read_csv(tmp_path / "out" / "path.csv")[1:]
    assert len({tuple(r[1:]) for r in rows}) == 1


def test_path_errors(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["path", "--config", cfg, "--p", "1,0,0"]) == 3
    assert main(["path", "--config", cfg, "--p", "1,1,0", "--q", "0,1,0"]) == 3


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path)
    res = subprocess.run([sys.executable, "-m", "effplan", "path", "--config", cfg,
                          "--p", "0,0,1", "--q", "0,0,-1"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "domain 2" in res.stdout
    res = subprocess.run([sys.executable, "-m", "effplan", "audit", "--planner"],
                         capture_output=True, text=True)
    assert res.returncode == 3
