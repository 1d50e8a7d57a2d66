"""Run-configuration schema (YAML, fail-closed) and the experiment dispatcher.

A config file is a nested mapping; unknown keys anywhere are errors, as are
out-of-range values (e.g. any dimension other than 3 or 4).  Each experiment
writes a manifest (config echo, variational constants, grid hash), one CSV of
diagnostics per run, and a JSON report, all with deterministic content.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import diagnostics as diag
from .evolve import EvolveConfig
from .grid import make_grid
from .ground_state import GridQualityError, compute_constants
from .harness import (
    NumericalAbort,
    bisect_threshold,
    bubbles_experiment,
    convergence_study,
    decay_suite,
    heat_rate_suite,
    levine_experiment,
    refined_experiment,
    run_single,
)
from .initial_data import FAMILIES, InitialDataSpec, build_initial_data

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3

EXPERIMENTS = (
    "simulate",
    "decay",
    "threshold",
    "levine",
    "refined",
    "decay_suite",
    "heat_check",
    "bubbles",
    "convergence",
)


class SchemaError(ValueError):
    pass


_GRID_KEYS = {"d", "r_max", "n", "grading", "inner_radius"}
_EVOLVE_KEYS = {
    "t_final",
    "dt_init",
    "dt_min",
    "dt_max",
    "error_tol",
    "linf_ceiling",
    "checkpoint_every",
    "checkpoint_growth",
    "store_fields",
    "store_every",
    "max_steps",
}
_FAMILY_KEYS = {"family", "a", "sigma", "eps", "lam", "s", "r_c"}
_TOP_KEYS = {
    "experiment",
    "grid",
    "evolve",
    "initial_data",
    "decay_floor",
    "threshold",
    "heat_check",
    "decay_suite",
    "levine",
    "refined",
    "bubbles",
    "convergence",
    "workers",
}
_SUB_KEYS = {
    "threshold": {"a_min", "a_max", "rel_tol"},
    "heat_check": {"pairs", "t_lo", "t_hi", "n_times", "n_steps"},
    "decay_suite": {"amplitudes"},
    "levine": {"alpha", "epsilon"},
    "refined": {"grad_ratio", "r_c"},
    "bubbles": {"scales", "j_max", "stop_tol"},
    "convergence": {"n_values"},
}

DEFAULT_GRID = {"d": 4, "r_max": 100.0, "n": 1024, "grading": "graded", "inner_radius": 5.0}
DEFAULT_EVOLVE = {"t_final": 50.0, "error_tol": 1e-6, "dt_init": 1e-4}


def _check_keys(section: dict, allowed: set, where: str):
    if not isinstance(section, dict):
        raise SchemaError(f"{where}: expected a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")


def validate_config(cfg: dict) -> dict:
    """Fail-closed validation; returns the config with defaults filled in."""
    _check_keys(cfg, _TOP_KEYS, "top level")
    if "experiment" not in cfg:
        raise SchemaError("missing required key 'experiment'")
    if cfg["experiment"] not in EXPERIMENTS:
        raise SchemaError(
            f"unknown experiment {cfg['experiment']!r}; one of {EXPERIMENTS}"
        )
    out = dict(cfg)

    grid = {**DEFAULT_GRID, **cfg.get("grid", {})}
    _check_keys(cfg.get("grid", {}), _GRID_KEYS, "grid")
    if grid["d"] not in (3, 4):
        raise SchemaError(f"grid.d must be 3 or 4, got {grid['d']}")
    if not isinstance(grid["n"], int) or grid["n"] < 16:
        raise SchemaError("grid.n must be an integer >= 16")
    if grid["r_max"] <= 0:
        raise SchemaError("grid.r_max must be positive")
    if grid["grading"] not in ("uniform", "graded"):
        raise SchemaError("grid.grading must be 'uniform' or 'graded'")
    out["grid"] = grid

    _check_keys(cfg.get("evolve", {}), _EVOLVE_KEYS, "evolve")
    out["evolve"] = {**DEFAULT_EVOLVE, **cfg.get("evolve", {})}

    fam = cfg.get("initial_data", {"family": "gaussian", "a": 0.1})
    _check_keys(fam, _FAMILY_KEYS, "initial_data")
    if fam.get("family", "gaussian") not in FAMILIES:
        raise SchemaError(f"initial_data.family must be one of {FAMILIES}")
    out["initial_data"] = fam

    for name, keys in _SUB_KEYS.items():
        if name in cfg:
            _check_keys(cfg[name], keys, name)

    df = cfg.get("decay_floor", 1e-2)
    if not (isinstance(df, (int, float)) and df > 0):
        raise SchemaError("decay_floor must be a positive number")
    out["decay_floor"] = float(df)
    workers = cfg.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise SchemaError("workers must be a positive integer")
    out["workers"] = workers
    return out


def load_config(path: str | Path) -> dict:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SchemaError("config file must contain a mapping")
    return validate_config(raw)


# ---------------------------------------------------------------------------
# persistence


def _json_default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not JSON-serializable: {type(o)}")


def _sanitize(obj):
    """Replace non-finite floats so json stays standard-compliant."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.bool_, np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_sanitize(payload), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def write_record_csv(path: Path, record) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(record.to_csv())


# ---------------------------------------------------------------------------
# dispatcher


def run_experiment(config: dict, out_dir: str | Path) -> int:
    """Execute one experiment; returns a process exit code and writes
    manifest.json, report.json and per-run CSVs under `out_dir`."""
    try:
        cfg = validate_config(config)
    except SchemaError as exc:
        print(f"config error: {exc}")
        return EXIT_SCHEMA

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _run_validated(cfg, out)
    except (NumericalAbort, GridQualityError) as exc:
        print(f"numerical abort: {exc}")
        write_json(out / "report.json", {"error": str(exc)})
        return EXIT_NUMERICAL


def _run_validated(cfg: dict, out: Path) -> int:
    g = cfg["grid"]
    grid = make_grid(g["d"], g["r_max"], g["n"], g["grading"], g.get("inner_radius", 5.0))
    consts = compute_constants(grid)
    evolve_cfg = EvolveConfig(**cfg["evolve"])
    family = InitialDataSpec(**cfg["initial_data"])
    experiment = cfg["experiment"]
    records = []
    report: dict[str, Any]

    if experiment in ("simulate", "decay"):
        built = build_initial_data(family, grid, consts)
        record = run_single(built, evolve_cfg, decay_floor_rel=cfg["decay_floor"] * 0.1)
        records.append(record)
        trap = diag.gradient_trapping_monitor(record, consts)
        report = {
            "verdict": record.verdict.status,
            "terminal_time": record.verdict.terminal_time,
            "reason": record.verdict.reason,
            "E0": built.energy,
            "grad_sq0": built.grad_sq,
            "below_threshold": built.below_threshold,
            "decayed": diag.decay_verdict(record, cfg["decay_floor"]),
            "max_grad_ratio": trap.max_ratio if trap.applicable else None,
        }
    elif experiment == "threshold":
        t = cfg.get("threshold", {})
        result = bisect_threshold(
            family,
            t.get("a_min", 0.5),
            t.get("a_max", 8.0),
            t.get("rel_tol", 1e-3),
            grid,
            consts,
            evolve_cfg,
        )
        records = result.records
        report = result.as_dict()
    elif experiment == "levine":
        lv = cfg.get("levine", {})
        built = build_initial_data(family, grid, consts)
        report, record = levine_experiment(
            built, evolve_cfg, consts, lv.get("alpha", 0.1), lv.get("epsilon", 0.1)
        )
        records.append(record)
    elif experiment == "refined":
        rf = cfg.get("refined", {})
        report, record = refined_experiment(
            grid, consts, evolve_cfg, rf.get("grad_ratio", 1.2), rf.get("r_c", 25.0)
        )
        records.append(record)
    elif experiment == "decay_suite":
        ds = cfg.get("decay_suite", {})
        amplitudes = ds.get("amplitudes", list(np.linspace(0.1, 2.5, 10)))
        reports, records = decay_suite(
            amplitudes,
            family,
            {"d": g["d"], "r_max": g["r_max"], "n": g["n"], "grading": g["grading"]},
            evolve_cfg,
            workers=cfg["workers"],
        )
        report = {"runs": reports}
    elif experiment == "heat_check":
        hc = cfg.get("heat_check", {})
        pairs = hc.get("pairs", [[1, "inf"], [2, 4], [2, 2]])
        report = {
            "pairs": heat_rate_suite(
                grid,
                pairs,
                hc.get("t_lo", 10.0),
                hc.get("t_hi", 100.0),
                hc.get("n_times", 6),
                hc.get("n_steps", 512),
            )
        }
    elif experiment == "bubbles":
        bb = cfg.get("bubbles", {})
        report = bubbles_experiment(
            grid,
            bb.get("scales", [1.0, 1000.0]),
            bb.get("j_max", 4),
            bb.get("stop_tol", 0.05),
        )
    elif experiment == "convergence":
        cv = cfg.get("convergence", {})
        report = convergence_study(
            g["d"], g["r_max"], cv.get("n_values", [512, 1024, 2048, 4096]), g["grading"]
        )
    else:  # pragma: no cover - validate_config already rejects
        raise SchemaError(f"unhandled experiment {experiment}")

    manifest = {
        "experiment": experiment,
        "config": cfg,
        "grid": grid.spec(),
        "constants": consts.as_dict(),
        "n_runs": len(records),
    }
    write_json(out / "manifest.json", manifest)
    write_json(out / "report.json", report)
    for i, rec in enumerate(records):
        write_record_csv(out / f"run_{i:03d}.csv", rec)
    return EXIT_OK
