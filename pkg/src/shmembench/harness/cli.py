"""Command-line driver: parse a config, run it, emit results and a report.

Exit codes: 0 success, 1 ground-truth report failures, 2 configuration or
usage error, 3 simulation deadlock.
"""

from __future__ import annotations

import argparse
import sys

from ..pgas import DeadlockError
from .config import MEASUREMENT_TYPES, ConfigError, parse_config
from .runner import emit_results, ground_truth_report, run_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shmembench",
        description="Simulated one-sided-communication benchmark driver")
    parser.add_argument("--config", help="path to the benchmark config file")
    parser.add_argument("--output", help="write results here instead of stdout")
    parser.add_argument("--format", choices=("csv", "jsonl"),
                        help="result format (default: config, then csv)")
    parser.add_argument("--seed", type=int,
                        help="override the config's base seed (u64)")
    parser.add_argument("--report", action="store_true",
                        help="print the ground-truth comparison report")
    parser.add_argument("--list", action="store_true",
                        help="list available measurement types and exit")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list:
        print("\n".join(sorted(MEASUREMENT_TYPES)))
        return 0
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 2
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except (OSError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if args.seed is not None and not 0 <= args.seed < (1 << 64):
        print("error: --seed must fit in 64 bits", file=sys.stderr)
        return 2
    out_format = args.format or cfg.out_format
    try:
        rows = run_config(cfg, seed=args.seed)
    except DeadlockError as e:
        print(f"error: simulation deadlock: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    text = emit_results(rows, out_format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if args.report:
        report, failures = ground_truth_report(rows, cfg.tolerance)
        sys.stdout.write(report)
        if failures:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
