"""Command-line entry point: run sweeps, validate configs, print version.

Exit codes: 0 success with every seed ok, 1 some seeds failed (at most
10%), 2 invalid configuration, 3 more than 10% of seeds failed.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import ScenarioConfig
from .errors import ConfigurationError
from .harness import FIGURES, SweepSpec, run_experiment


def _load_config(path) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig().validate()
    return ScenarioConfig.from_json(path)


def _default_workers():
    env = os.environ.get("AMBSC_NOMA_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ambsc-noma",
        description="Energy-efficiency experiments for the backscatter-assisted "
                    "cooperative NOMA downlink")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep for one figure")
    run.add_argument("--config", help="JSON scenario config (defaults baked in)")
    run.add_argument("--figure", required=True, choices=FIGURES)
    run.add_argument("--seeds", type=int, default=100)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out-dir", required=True)
    run.add_argument("--no-baseline", action="store_true",
                     help="skip the non-cooperative baseline runs")

    val = sub.add_parser("validate", help="validate a JSON scenario config")
    val.add_argument("--config", required=True)

    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "version":
        print(__version__)
        return 0

    if args.command == "validate":
        try:
            ScenarioConfig.from_json(args.config)
        except (ConfigurationError, OSError) as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 2
        print("config ok")
        return 0

    try:
        config = _load_config(args.config)
        sweep = SweepSpec(figure_id=args.figure, seeds=args.seeds,
                          baseline=not args.no_baseline)
    except (ConfigurationError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2

    workers = args.workers if args.workers else _default_workers()
    csv_path, manifest_path, failed_share = run_experiment(
        config, sweep, args.out_dir, workers=workers)
    print(f"wrote {csv_path}")
    print(f"wrote {manifest_path}")
    if failed_share > 0.10:
        print(f"{failed_share:.1%} of seeds failed", file=sys.stderr)
        return 3
    if failed_share > 0:
        print(f"{failed_share:.1%} of seeds failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
