"""Command line entry point: ``run``, ``suite`` and ``calibrate``."""
from __future__ import annotations

import argparse
import json
import sys

from .scenarios import (EXIT_ERROR, ConfigError, calibrate, default_suite, load_config,
                        run_suite)
from .solver import DOMAIN_KINDS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robinstar",
                                description="Seeded comparison suites for Robin Poisson problems.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenarios of a JSON config")
    run.add_argument("--config", required=True, help="path to the suite JSON file")
    run.add_argument("--out", default=None, help="existing output directory (overrides config)")
    run.add_argument("--jobs", type=int, default=None, help="worker processes")
    run.add_argument("--quiet", action="store_true", help="do not echo the effective config")

    suite = sub.add_parser("suite", help="run a built-in preset")
    suite.add_argument("--preset", choices=["default"], default="default")
    suite.add_argument("--seed", type=int, default=0)
    suite.add_argument("--out", default=".", help="existing output directory")
    suite.add_argument("--jobs", type=int, default=1)

    cal = sub.add_parser("calibrate", help="refinement sweep and fitted tolerance constants")
    cal.add_argument("--domain", required=True, choices=sorted(DOMAIN_KINDS))
    cal.add_argument("--levels", type=int, default=4)
    cal.add_argument("--seeds", type=int, default=5, help="number of seeds (0..N-1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        if not args.quiet:
            print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
        code, _, _ = run_suite(config, out_dir=args.out, jobs=args.jobs)
        return code
    if args.command == "suite":
        code, _, _ = run_suite(default_suite(args.seed), out_dir=args.out, jobs=args.jobs)
        return code
    try:
        calibrate(args.domain, args.levels, seeds=range(args.seeds))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
