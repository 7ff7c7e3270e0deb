"""Command-line front end: ``effplan {audit,properties,cutband,path}``.

Settings come from a JSON file (``--config``); flags override file values.
Exit codes: 0 success, 2 planner/runtime failure, 3 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _io
from .audit import DEFAULT_EPSILONS, audit, cutband_measure
from .errors import ConfigError, ConstraintViolation, GeometryError
from .geodesics import distance
from .manifolds import from_config
from .planners import build_planner, check_properties, path_length

EXIT_OK = 0
EXIT_RUNTIME = 2
EXIT_CONFIG = 3
PROPERTY_PAIRS = 1000


@dataclass
class RunConfig:
    manifold: dict = field(default_factory=lambda: {"kind": "sphere", "n": 2})
    planner: str = "sigma0+antipodal"
    n_pairs: int = 100_000
    grid_size: int = 257
    seed: int = 0
    cut_tolerance: float = 1e-6
    output_dir: str = "."
    epsilons: list = field(default_factory=lambda: list(DEFAULT_EPSILONS))
    p: list = None
    q: list = None

    def validate(self):
        if not isinstance(self.n_pairs, int) or self.n_pairs < 1000:
            raise ConfigError(f"n_pairs must be an integer >= 1000, got {self.n_pairs!r}")
        g = self.grid_size
        if not isinstance(g, int) or g < 65 or (g - 1) & (g - 2) != 0:
            raise ConfigError(f"grid_size must be 2^k + 1 with k >= 6, got {g!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not (0.0 < float(self.cut_tolerance) <= 0.1):
            raise ConfigError(f"cut_tolerance must lie in (0, 0.1], got {self.cut_tolerance!r}")
        self.manifold_model = from_config(self.manifold)
        self.planner_model = build_planner(self.planner, self.manifold_model, float(self.cut_tolerance))
        return self


def load_config(path):
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**data)


def _floats(text, what):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad {what} list {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int)
    common.add_argument("--pairs", type=int)
    common.add_argument("--grid", type=int)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", metavar="DIR")

    parser = _Parser(prog="effplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("audit", parents=[common], help="estimate planner length, distance integral and defect")
    sub.add_parser("properties", parents=[common], help="check the three properties of the geodesic planner")
    cb = sub.add_parser("cutband", parents=[common], help="measure of the cut-locus band for several widths")
    cb.add_argument("--epsilons", metavar="CSV")
    pa = sub.add_parser("path", parents=[common], help="export the planned path for one pair")
    pa.add_argument("--p", metavar="CSV")
    pa.add_argument("--q", metavar="CSV")
    return parser


def _resolve(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.pairs is not None:
        cfg.n_pairs = args.pairs
    if args.grid is not None:
        cfg.grid_size = args.grid
    if args.out is not None:
        cfg.output_dir = args.out
    if getattr(args, "epsilons", None):
        cfg.epsilons = _floats(args.epsilons, "epsilon")
    if getattr(args, "p", None):
        cfg.p = _floats(args.p, "point")
    if getattr(args, "q", None):
        cfg.q = _floats(args.q, "point")
    if args.threads is None or args.threads < 1:
        raise ConfigError("--threads must be a positive integer")
    return cfg.validate()


def cmd_audit(cfg, threads):
    report = audit(cfg.manifold_model, cfg.planner_model, cfg.n_pairs, cfg.grid_size, cfg.seed,
                   threads, cfg.epsilons, float(cfg.cut_tolerance))
    _io.write_json(Path(cfg.output_dir) / "audit.json", report.to_dict())
    return EXIT_OK


def cmd_properties(cfg, threads):
    rep = check_properties(cfg.manifold_model, cfg.planner_model, PROPERTY_PAIRS, cfg.seed, cfg.grid_size)
    _io.write_json(Path(cfg.output_dir) / "properties.json", rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_RUNTIME


def cmd_cutband(cfg, threads):
    try:
        curve = cutband_measure(cfg.manifold_model, cfg.epsilons, cfg.n_pairs, cfg.seed, threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _io.write_csv(Path(cfg.output_dir) / "cutband.csv", ["epsilon", "fraction"],
                  [(c.epsilon, c.fraction) for c in curve])
    return EXIT_OK


def cmd_path(cfg, threads):
    if cfg.p is None or cfg.q is None:
        raise ConfigError("path needs both --p and --q")
    m = cfg.manifold_model
    p = m.check(np.asarray(cfg.p, dtype=float))
    q = m.check(np.asarray(cfg.q, dtype=float))
    path, domain = cfg.planner_model.plan(p, q, cfg.grid_size)
    path.to_csv(Path(cfg.output_dir) / "path.csv")
    print(f"length {_io.fmt_float(path_length(path))}")
    print(f"distance {_io.fmt_float(distance(m, p, q))}")
    print(f"domain {domain}")
    return EXIT_OK


COMMANDS = {"audit": cmd_audit, "properties": cmd_properties, "cutband": cmd_cutband, "path": cmd_path}


def _glue_point_flags(argv):
    # "--q -1,0,0" would otherwise be read as an unknown option
    out, it = [], iter(argv)
    for a in it:
        if a in ("--p", "--q", "--epsilons"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = make_parser().parse_args(_glue_point_flags(argv))
        cfg = _resolve(args)
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.threads)
    except (ConfigError, ConstraintViolation) as exc:
        print(f"effplan: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"effplan: planner failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - only codes 0/2/3 are allowed
        print(f"effplan: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def run():
    sys.exit(main())
