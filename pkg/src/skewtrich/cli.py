"""Command-line entry point.

Exit codes: 0 every requested check passed, 1 a check failed, 2 config or
usage error, 3 internal numeric error.
"""

from __future__ import annotations

import argparse
import sys

from .core import GRID_PRESETS
from .errors import ConfigError, ParamError
from .report import Config, load_config, run_report, serialize

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SUBCOMMANDS = {
    "axioms": ["axioms"],
    "compat": ["compat"],
    "verify": ["verify"],
    "estimate": ["estimate"],
    "phi-check": ["phi"],
    "integrals": ["integrals", "hypotheses"],
    "falsify-global": ["falsify"],
    "report": None,            # the config's (or the scenario's default) pipeline
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config document")
    common.add_argument("--scenario", help="example1, example2, example3 or custom")
    common.add_argument("--out", help="write the JSON report here (default: stdout)")
    common.add_argument("--csv", help="write per-cell log margins of the verify step as CSV")
    common.add_argument("--tol", type=float, help="verification tolerance on log margins")
    common.add_argument("--seed", type=int, help="seed for the random probe vectors")
    common.add_argument("--grid-preset", choices=sorted(GRID_PRESETS), help="sampling grid preset")
    parser = argparse.ArgumentParser(prog="skewtrich", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if args.scenario:
        cfg.scenario = args.scenario.lower()
    if args.seed is not None:
        cfg.seed = args.seed
    analyses = SUBCOMMANDS[args.command]
    if analyses is not None:
        cfg.analyses = list(analyses)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        report = run_report(cfg, out=args.out, csv_path=args.csv, tol=args.tol, preset=args.grid_preset)
    except (ConfigError, ParamError, OSError) as exc:
        print(f"skewtrich: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything escaping the per-analysis guards is a numeric/internal fault
        print(f"skewtrich: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.out:
        sys.stdout.write(serialize(report))
    for name, section in report.sections.items():
        status = "PASS" if section.get("pass") else "FAIL"
        print(f"{name:<11} {status}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
