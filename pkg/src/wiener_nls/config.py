"""Experiment configuration, result persistence and manifests."""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__

OUTPUT_ENV = "WIENER_NLS_OUTPUT"
MANIFEST = "manifest.json"

EXPERIMENTS = ("simulate", "expand", "norms", "tail", "smoothing", "scaling", "moments", "invariants")

_GRID_KEYS = {"d": int, "n": int, "L": float, "n_t": int, "T": float, "dealias": float}
_SOLVER_KEYS = {
    "M": int,
    "sign": int,
    "tol_fix": float,
    "max_iters": int,
    "sigma": float,
    "monitor": str,
    "delta0": float,
}
_DATUM_KEYS = {
    "kind": str,
    "S": float,
    "ell": list,
    "radius": float,
    "extent": int,
    "n_top": int,
    "amplitude": (float, type(None)),
    "path": (str, type(None)),
}


class ConfigError(ValueError):
    """Schema violations, one message per offending key path."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


@dataclass
class ExperimentConfig:
    grid: dict = field(default_factory=lambda: {"d": 1, "n": 256, "L": 32.0, "n_t": 128, "T": 1.0})
    datum: dict = field(default_factory=lambda: {"kind": "power_law", "S": 0.3})
    solver: dict = field(default_factory=dict)
    experiment: str = "simulate"
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        problems = validate(self.to_dict(include_runtime=True))
        if problems:
            raise ConfigError(problems)

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "grid": dict(self.grid),
            "datum": dict(self.datum),
            "solver": dict(self.solver),
            "experiment": self.experiment,
            "params": dict(self.params),
            "seed": self.seed,
        }
        if include_runtime:
            out["workers"] = self.workers
            out["output"] = self.output
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(["<root>: expected a mapping"])
        unknown = set(raw) - {"grid", "datum", "solver", "experiment", "params", "seed", "workers", "output"}
        if unknown:
            raise ConfigError([f"{k}: unknown key" for k in sorted(unknown)])
        return cls(**raw)

    def canonical(self) -> str:
        """Sorted-key JSON of the semantic fields (runtime knobs excluded)."""
        return json.dumps(self.to_dict(include_runtime=False), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _check_section(raw, name: str, schema: dict, required=()) -> list[str]:
    problems = []
    if not isinstance(raw, dict):
        return [f"{name}: expected a mapping"]
    for key in required:
        if key not in raw:
            problems.append(f"{name}.{key}: required")
    for key, val in raw.items():
        if key not in schema:
            problems.append(f"{name}.{key}: unknown key")
            continue
        want = schema[key]
        if want is float and isinstance(val, int) and not isinstance(val, bool):
            continue
        if isinstance(val, bool) or not isinstance(val, want):
            problems.append(f"{name}.{key}: expected {getattr(want, '__name__', want)}, got {type(val).__name__}")
    return problems


def validate(raw: dict) -> list[str]:
    problems = []
    problems += _check_section(raw.get("grid"), "grid", _GRID_KEYS, required=("d", "n", "L"))
    problems += _check_section(raw.get("datum"), "datum", _DATUM_KEYS, required=("kind",))
    problems += _check_section(raw.get("solver"), "solver", _SOLVER_KEYS)
    if raw.get("experiment") not in EXPERIMENTS:
        problems.append(f"experiment: must be one of {', '.join(EXPERIMENTS)}")
    if not isinstance(raw.get("params"), dict):
        problems.append("params: expected a mapping")
    seed = raw.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        problems.append("seed: expected a non-negative integer")
    workers = raw.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        problems.append("workers: expected a positive integer")
    if problems:
        return problems
    # semantic checks once the shapes are right
    from .grid import Grid

    try:
        Grid(**raw["grid"])
    except (TypeError, ValueError) as err:
        problems.append(f"grid: {err}")
    from .experiments import DatumSpec

    try:
        d = dict(raw["datum"])
        if "ell" in d:
            d["ell"] = tuple(d["ell"])
        DatumSpec(**d)
    except (TypeError, ValueError) as err:
        problems.append(f"datum: {err}")
    from .solver import SolverConfig

    try:
        SolverConfig(**raw["solver"])
    except (TypeError, ValueError) as err:
        problems.append(f"solver: {err}")
    return problems


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    return ExperimentConfig.from_dict(raw or {})


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    data = cfg.to_dict(include_runtime=True)
    if path.suffix == ".json":
        path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    else:
        path.write_text(yaml.safe_dump(data, sort_keys=True))
    return path


# -- results -------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class ResultManifest:
    config_hash: str
    seed: int
    version: str
    wall_time: float
    files: dict

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
            "files": dict(sorted(self.files.items())),
        }

    @classmethod
    def load(cls, directory) -> "ResultManifest":
        raw = json.loads((Path(directory) / MANIFEST).read_text())
        return cls(**raw)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _dump_csv(table: dict) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table["header"])
    for row in table["rows"]:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def save_results(directory, records: dict, cfg: ExperimentConfig, wall_time: float | None = None) -> ResultManifest:
    """Write ``records`` into ``directory`` and a checksummed manifest.

    Keys ending in ``.csv`` take ``{"header": [...], "rows": [...]}``; every
    other record is written as sorted-key JSON.  The resolved config goes to
    ``config.json``.  Wall time appears only in the manifest, so the data
    files of two identical runs are byte-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = {}
    all_records = {"config.json": cfg.to_dict(include_runtime=False), **records}
    for name, obj in all_records.items():
        path = directory / name
        text = _dump_csv(obj) if name.endswith(".csv") else _dump_json(obj)
        path.write_text(text)
        files[name] = _sha256(path)
    manifest = ResultManifest(
        config_hash=cfg.config_hash(),
        seed=cfg.seed,
        version=__version__,
        wall_time=float(wall_time if wall_time is not None else time.perf_counter() - t0),
        files=files,
    )
    (directory / MANIFEST).write_text(_dump_json(manifest.to_dict()))
    return manifest


def verify(directory) -> list[str]:
    """Checksum mismatches and missing files; empty when the directory is intact."""
    directory = Path(directory)
    manifest = ResultManifest.load(directory)
    problems = []
    for name, digest in manifest.files.items():
        path = directory / name
        if not path.exists():
            problems.append(f"{name}: missing")
        elif _sha256(path) != digest:
            problems.append(f"{name}: checksum mismatch")
    return problems
