"""Command-line surface: thin wrappers mapping subcommands onto experiments.

Exit codes: 0 success, 2 config/schema violation, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .config import EXIT_SCHEMA, SchemaError, run_experiment

_SUBCOMMANDS = {
    "simulate": "simulate",
    "threshold": "threshold",
    "levine": "levine",
    "refined": "refined",
    "decay-suite": "decay_suite",
    "heat-check": "heat_check",
    "bubbles": "bubbles",
    "convergence": "convergence",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critheat",
        description="Numerical experiments on the focusing energy-critical heat "
        "equation in R^4 (radial).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel workers for suites")
        p.add_argument("--grid-N", type=int, dest="grid_n", help="grid node count")
        p.add_argument("--rmax", type=float, help="truncation radius")
        p.add_argument("--tfinal", type=float, help="time horizon")
        if name in ("simulate", "levine"):
            p.add_argument("--family", choices=["gaussian", "bubble_scaled", "truncated_bubble"])
            p.add_argument("--amplitude", type=float, help="gaussian amplitude")
    return parser


def _assemble_config(args) -> dict:
    if args.config:
        with open(args.config) as fh:
            cfg = yaml.safe_load(fh)
        if not isinstance(cfg, dict):
            raise SchemaError("config file must contain a mapping")
    else:
        cfg = {}
    cfg["experiment"] = _SUBCOMMANDS[args.command]
    if args.workers is not None:
        cfg["workers"] = args.workers
    grid = cfg.setdefault("grid", {})
    if args.grid_n is not None:
        grid["n"] = args.grid_n
    if args.rmax is not None:
        grid["r_max"] = args.rmax
    if args.tfinal is not None:
        cfg.setdefault("evolve", {})["t_final"] = args.tfinal
    fam = getattr(args, "family", None)
    amp = getattr(args, "amplitude", None)
    if fam is not None or amp is not None:
        data = cfg.setdefault("initial_data", {"family": "gaussian"})
        if fam is not None:
            data["family"] = fam
        if amp is not None:
            data["a"] = amp
    # default horizons: long for decay probes, short for blow-up probes
    if cfg["experiment"] in ("levine", "refined"):
        cfg.setdefault("evolve", {}).setdefault("t_final", 20.0)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _assemble_config(args)
    except (SchemaError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return run_experiment(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
