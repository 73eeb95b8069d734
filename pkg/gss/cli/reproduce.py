"""gss reproduce: rerun a bundled table and check it against its targets"""

import argparse

from loguru import logger

from gss.cli.simulate import add_run_flags, write_report
from gss.services.sim_harness import TABLES, assert_strict, reproduce


def register(subparsers) -> None:
    parser = subparsers.add_parser("reproduce", help="rerun a bundled table against its targets")
    parser.add_argument("table", choices=sorted(TABLES), help="bundled table")
    parser.add_argument(
        "--strict",
        action="store_true",
        help="also fail when a directional ordering target is missed",
    )
    add_run_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    report, checks = reproduce(args.table, seed=args.seed, reps=args.reps, threads=args.threads)
    write_report(report, args.out)
    passed = sum(c.passed for c in checks)
    logger.info(f"{passed}/{len(checks)} target(s) met for {args.table}")
    assert_strict(checks, include_directional=args.strict)
