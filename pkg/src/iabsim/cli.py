"""Command-line front end: run experiments from a YAML config and emit a
CSV result table plus a manifest that reproduces it."""
from __future__ import annotations

import argparse
import copy
import logging
import pathlib
import sys
import traceback

import yaml

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .optimizer import InfeasiblePlacementError
from .scenarios import run_scenario

SCENARIO_SUMMARIES = {
    "symmetric-line": "donor at the center, two children at +s/-s; sweeps s",
    "symmetric-ring": "donor at the center, children on a circle of radius s; sweeps s",
    "rate-cdf": "per-UE rate CDFs for combinations of child distance and antenna gain",
    "min-distance-sweep": "optimized vs hexagonal deployment under a pairwise spacing floor",
    "forbidden-area-sweep": "optimized vs random deployment with circular keep-out areas",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iabsim",
        description="Monte-Carlo coverage experiments for two-hop wireless "
        "access/backhaul networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", required=True, metavar="PATH",
                       help="YAML experiment file")

    def add_overrides(p):
        p.add_argument("--seed", type=int, metavar="U64", help="master seed override")
        p.add_argument("--trials", type=int, metavar="N",
                       help="Monte-Carlo trials per point override")
        p.add_argument("--out", metavar="DIR", help="output directory override")
        p.add_argument("--parallelism", type=int, metavar="N",
                       help="worker processes for sweep cells")

    p_run = sub.add_parser("run", help="execute only the first sweep grid point")
    add_config(p_run)
    add_overrides(p_run)
    p_sweep = sub.add_parser("sweep", help="execute the full sweep grid")
    add_config(p_sweep)
    add_overrides(p_sweep)
    p_val = sub.add_parser("validate-config", help="check a config and exit")
    add_config(p_val)
    sub.add_parser("list-scenarios", help="list scenario names")
    return parser


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "trials": args.trials,
        "out": args.out,
        "parallelism": args.parallelism,
    }


def _execute(args, single_point: bool) -> int:
    cfg = load_config(args.config, _overrides(args))
    if single_point:
        resolved = copy.deepcopy(cfg.resolved)
        resolved["sweep"]["grid"] = [cfg.sweep_grid()[0]]
        cfg = ExperimentConfig(resolved=resolved)
    table = run_scenario(cfg)
    if len(table) == 0:
        print("no feasible sweep points; nothing to write", file=sys.stderr)
        return 3
    out_dir = pathlib.Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.scenario}.csv"
    table.write_csv(csv_path)
    manifest_path = out_dir / f"{cfg.scenario}.manifest.yaml"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_manifest(__version__, "iabsim"), fh,
                       sort_keys=True, default_flow_style=False)
    print(f"wrote {len(table)} rows to {csv_path}")
    print(f"manifest: {manifest_path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for name, summary in SCENARIO_SUMMARIES.items():
                print(f"{name}: {summary}")
            return 0
        if args.command == "validate-config":
            cfg = load_config(args.config)
            print(f"OK: {args.config} ({cfg.scenario})")
            return 0
        return _execute(args, single_point=(args.command == "run"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasiblePlacementError as exc:
        print(f"infeasible placement: {exc}", file=sys.stderr)
        return 3
    except Exception:
        traceback.print_exc()
        return 1
