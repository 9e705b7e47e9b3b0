"""Command-line front end: `attacksearch <mode> --config <path> [--out DIR] [--seed N]`."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (run_bench_mode, run_memory_mode, run_oracle_mode,
                    run_report_mode, run_search_mode, run_theory_mode)
from .runconfig import MODES, RunConfig, RunConfigError, parse_run_config

_HANDLERS = {
    "search": run_search_mode,
    "oracle": run_oracle_mode,
    "theory": run_theory_mode,
    "bench": run_bench_mode,
    "memory": run_memory_mode,
    "report": run_report_mode,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attacksearch",
        description="Finite-budget attack-configuration search against simulated victims.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        mode_parser = sub.add_parser(mode, help=f"run the {mode} mode")
        mode_parser.add_argument("--config", required=True, help="run-configuration file")
        mode_parser.add_argument("--out", default=None, help="output directory override")
        mode_parser.add_argument("--seed", type=int, default=None, help="seed override")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config: RunConfig = parse_run_config(args.config)
    config = replace(config, mode=args.mode)
    if args.seed is not None:
        if args.seed < 0:
            raise RunConfigError("seed must be >= 0", key="--seed")
        config = replace(config, seed=args.seed)
    out_dir = Path(args.out) if args.out is not None else Path(config.out_dir)
    return _HANDLERS[args.mode](config, out_dir)


def main(argv=None) -> int:
    try:
        return run(argv)
    except RunConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
