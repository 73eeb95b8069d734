"""gss simulate: run an experiment configuration and write its CSV report"""

import argparse
import sys

from loguru import logger

from gss.services.sim_harness import describe_config, load_config, run_experiment
from gss.services.storage import LocalStorage, report_csv


def add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    parser.add_argument("--reps", type=int, default=None, help="Monte Carlo replicates per cell")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--out", default=None, help="CSV path; stdout when omitted")


def write_report(report, out) -> None:
    if out:
        LocalStorage().save_report(report, out)
    else:
        sys.stdout.write(report_csv(report))


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="run designs x populations from a JSON config")
    parser.add_argument("--config", required=True, help="experiment JSON file")
    add_run_flags(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    config = load_config(args.config)
    logger.debug(f"Configuration:\n{describe_config(config)}")
    report = run_experiment(config, seed=args.seed, reps=args.reps, threads=args.threads)
    write_report(report, args.out or config.run.out)
