"""Command-line experiment runner.

    conslab run <config-file> [--out DIR] [--seed N] [--jobs K]

Config files are flat ``key = value`` text (see README for the schema).
Exit codes: 0 all configured bounds pass, 1 a bound failed, 2 usage or
config error.
"""

import argparse
import os
import sys
from dataclasses import replace

from .experiments import ConfigError, parse_config, run_experiment

SCHEMA_POINTER = "see README.md, section 'Experiment configs'"


def build_parser():
    parser = argparse.ArgumentParser(prog="conslab",
                                     description="conservation-law experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment from a config file")
    runp.add_argument("config", help="flat key=value config file")
    runp.add_argument("--out", default=None, help="output directory "
                      "(default: config value or $CONSLAB_OUT)")
    runp.add_argument("--seed", type=int, default=None, help="override seed")
    runp.add_argument("--jobs", type=int, default=None,
                      help="parallel workers for sample sweeps")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "run":  # pragma: no cover - argparse enforces this
        parser.print_usage()
        return 2
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        print(f"expected schema: {SCHEMA_POINTER}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.jobs is not None:
        cfg = replace(cfg, jobs=args.jobs)
    out = args.out or os.environ.get("CONSLAB_OUT") or cfg.out
    try:
        cfg.validate()
        written, summary, passed = run_experiment(cfg, out_dir=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        print(f"expected schema: {SCHEMA_POINTER}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    for name, ok, detail in summary:
        tag = "PASS" if ok else "FAIL"
        print(f"[{tag}] {cfg.experiment}: {name}" + (f" ({detail})" if detail else ""))
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
