"""Command line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, default_output_root, load_config, save_results, verify

DEFAULT_GRIDS = {
    1: {"n": 1024, "L": 32.0},
    2: {"n": 128, "L": 16.0},
    3: {"n": 64, "L": 8.0},
}

# applied only when no --config is given, so a config file run keeps its hash
COMMAND_DEFAULTS = {
    "simulate": {"datum": "power_law:0.3", "M": 1, "sign": 1, "tol": 1e-8},
    "expand": {"datum": "power_law:0.3", "M": 3, "sign": 1},
    "norms": {"datum": "power_law:0.3", "sigma": 0.5},
    "montecarlo": {"kind": "tail", "datum": "lattice_bump:0.25", "k": 1, "samples": 500},
    "check-estimates": {"lemma": "dir_maximal", "samples": 30, "shells": "1,2,4"},
    "check-invariants": {"trials": 5},
}

COMMANDS = ("simulate", "expand", "norms", "montecarlo", "check-estimates", "check-invariants", "report")


class ValidationFailure(RuntimeError):
    """A pipeline ran but one of its checks failed."""


def _grid_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON experiment config; flags override it")
    p.add_argument("--d", type=int, required=False, help="spatial dimension (1-3)")
    p.add_argument("--n", type=int, help="points per axis (power of two)")
    p.add_argument("--L", type=float, help="box side length")
    p.add_argument("--n-t", dest="n_t", type=int, help="time samples")
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory (default: $WIENER_NLS_OUTPUT or ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wiener-nls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", argument_default=argparse.SUPPRESS, help="solve cubic NLS via the remainder fixed point")
    _grid_args(p)
    p.add_argument("--datum")
    p.add_argument("--M", type=int)
    p.add_argument("--sign", type=int, choices=(1, -1))
    p.add_argument("--tol", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--randomize", action="store_true", help="apply the unit-scale randomization")
    p.add_argument("--sample", type=int)

    p = sub.add_parser("expand", argument_default=argparse.SUPPRESS, help="multilinear corrections z_k and tree identities")
    _grid_args(p)
    p.add_argument("--datum")
    p.add_argument("--M", type=int)
    p.add_argument("--sign", type=int, choices=(1, -1))
    p.add_argument("--amplitude", type=float)

    p = sub.add_parser("norms", argument_default=argparse.SUPPRESS, help="norm tables for the free evolution of a datum")
    _grid_args(p)
    p.add_argument("--datum")
    p.add_argument("--sigma", type=float)
    p.add_argument("--amplitude", type=float)

    p = sub.add_parser("montecarlo", argument_default=argparse.SUPPRESS, help="tail, smoothing or moment campaigns")
    _grid_args(p)
    p.add_argument("--kind", choices=("tail", "smoothing", "moments"))
    p.add_argument("--datum")
    p.add_argument("--k", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--sigma", type=float)

    p = sub.add_parser("check-estimates", argument_default=argparse.SUPPRESS, help="directional and bilinear estimate scaling")
    _grid_args(p)
    p.add_argument("--lemma", choices=("dir_maximal", "dir_smoothing", "bilinear"))
    p.add_argument("--samples", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--shells", help="comma-separated dyadic shells, e.g. 1,2,4")

    p = sub.add_parser("check-invariants", argument_default=argparse.SUPPRESS, help="exact-identity suite")
    _grid_args(p)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("report", argument_default=argparse.SUPPRESS, help="verify and summarise a result directory")
    p.add_argument("directory")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    opt = vars(args)
    path = opt.get("config")
    if path is None and opt.get("d") is None:
        raise _Usage("--d is required unless --config is given")
    if path is not None:
        raw = load_config(path).to_dict()
        grid = dict(raw["grid"])
    else:
        opt = {**COMMAND_DEFAULTS.get(args.command, {}), **opt}
        raw = ExperimentConfig().to_dict()
        d = opt["d"]
        if d not in DEFAULT_GRIDS:
            raise ConfigError([f"grid.d: expected 1, 2 or 3, got {d}"])
        grid = {"d": d, **DEFAULT_GRIDS[d], "n_t": 64, "T": 1.0 if d == 1 else 0.1}
    for key in ("d", "n", "L", "n_t", "T"):
        if key in opt:
            grid[key] = opt[key]
    raw["grid"] = grid
    if "datum" in opt:
        from .experiments import DatumSpec

        spec = DatumSpec.parse(opt["datum"], grid["d"]).to_dict()
        raw["datum"] = {k: v for k, v in spec.items() if v is not None}
    if "amplitude" in opt:
        raw["datum"]["amplitude"] = opt["amplitude"]
    for key, field in (("seed", "seed"), ("workers", "workers"), ("out", "output")):
        if key in opt:
            raw[field] = opt[key]
    solver = dict(raw.get("solver", {}))
    if args.command in ("simulate", "expand"):
        for flag, key in (("M", "M"), ("sign", "sign"), ("tol", "tol_fix"), ("sigma", "sigma")):
            if flag in opt:
                solver[key] = opt[flag]
    raw["solver"] = solver
    params = dict(raw.get("params", {}))
    for key in ("randomize", "sample", "k", "samples", "kind", "lemma", "c", "shells", "trials"):
        if key in opt:
            params[key] = opt[key]
    if "sigma" in opt and args.command not in ("simulate", "expand"):
        params["sigma"] = opt["sigma"]
    raw["params"] = params
    raw["experiment"] = {
        "simulate": "simulate",
        "expand": "expand",
        "norms": "norms",
        "montecarlo": params.get("kind", "tail"),
        "check-estimates": "scaling",
        "check-invariants": "invariants",
    }[args.command]
    return ExperimentConfig.from_dict(raw)


class _Usage(Exception):
    pass


def output_dir(cfg: ExperimentConfig) -> Path:
    root = Path(cfg.output) if cfg.output else default_output_root()
    return root / f"{cfg.experiment}-{cfg.config_hash()[:12]}"


def cli_run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    if args.command == "report":
        return _report(args.directory)
    try:
        cfg = _config_from_args(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"invalid config: {msg}", file=sys.stderr)
        return 1
    from .pipelines import run_pipeline

    t0 = time.perf_counter()
    try:
        records, ok = run_pipeline(cfg)
    except (ValueError, ConfigError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 1
    out = output_dir(cfg)
    save_results(out, records, cfg, wall_time=time.perf_counter() - t0)
    print(out)
    return 0 if ok else 1


def _report(directory) -> int:
    path = Path(directory)
    if not (path / "manifest.json").exists():
        print(f"no manifest in {path}", file=sys.stderr)
        return 1
    problems = verify(path)
    manifest = json.loads((path / "manifest.json").read_text())
    print(f"config {manifest['config_hash'][:12]}  seed {manifest['seed']}  files {len(manifest['files'])}")
    for name in sorted(manifest["files"]):
        if name.endswith(".json") and name != "config.json":
            data = json.loads((path / name).read_text())
            summary = data.get("summary") if isinstance(data, dict) else None
            if summary:
                print(f"  {name}: {json.dumps(summary, sort_keys=True)}")
    for p in problems:
        print(f"  {p}", file=sys.stderr)
    return 1 if problems else 0


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
