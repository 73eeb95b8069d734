"""
Command-line entry point: gss {stationary, simulate, reproduce, design-search}
"""

import argparse
import sys
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from gss.cli import design_search, reproduce, simulate, stationary
from gss.core.config import settings
from gss.core.errors import GSSError
from gss.core.logging import setup_logging

COMMANDS = (stationary, simulate, reproduce, design_search)


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; gss reserves 2 for model errors"""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog=settings.APP_NAME,
        description="Graph spatial sampling with lagged Metropolis-Hastings walks",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="loguru level (default: %(default)s)")
    parser.add_argument("--log-file", default=settings.LOG_FILE, help="optional rotating log file")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    try:
        args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration:\n{e}")
        return 2
    except GSSError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
