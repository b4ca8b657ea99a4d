#!/usr/bin/env python3
import argparse
import importlib
import logging
import sys

import numpy as np

from qpauli import __version__
from qpauli.microsim import BoundarySolveError, GridMismatchError
from qpauli.services.config import ConfigService
from qpauli.services.state import StateService
from qpauli.solver import EventLocationError
from qpauli.unitary import PropagatorError

logger = logging.getLogger("qpauli.cli")

COMMANDS = ("generate", "rates", "evolve", "simulate", "check")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (
    PropagatorError,
    BoundarySolveError,
    EventLocationError,
    GridMismatchError,
    np.linalg.LinAlgError,
)
USAGE_ERRORS = (ValueError, OSError)


def _load_command(name: str):
    """Dynamically load the Command class of a subcommand module."""
    mod = importlib.import_module(f"qpauli.commands.{name}")
    return mod.Command


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpauli",
        description="Symmetric and antisymmetric Pauli master equations with a decoherence-cycle oracle.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--output-dir", help="output directory (overrides config, environment and scenario)")
    parser.add_argument("--config", help="configuration file (default ./qpauli.conf, then ~/.config/qpauli)")
    parser.add_argument("--workers", type=int, help="worker threads for 'check'")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("-v", "--verbose", action="store_true", help="same as --log-level INFO")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name in COMMANDS:
        cmd = _load_command(name)
        cmd.add_arguments(sub.add_parser(name, help=cmd.help, description=cmd.help))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = "INFO" if args.verbose and not args.log_level else args.log_level

    try:
        cfg = ConfigService(args.output_dir, args.workers, level, args.config)
    except (ValueError, OSError) as e:
        print(f"[FAIL] {e}")
        return EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, cfg.log_level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )

    state = StateService(cfg)
    command = _load_command(args.command)(cfg, state)
    try:
        code = command.run(args)
    except NUMERICAL_ERRORS as e:
        logger.debug("numerical failure", exc_info=True)
        print(f"[FAIL] numerical failure: {e}")
        return EXIT_NUMERICAL
    except USAGE_ERRORS as e:
        logger.debug("usage error", exc_info=True)
        print(f"[FAIL] {e}")
        return EXIT_USAGE

    try:
        state.save()
    except OSError as e:
        print(f"[WARN] Failed to save state: {e}")
    return code


if __name__ == "__main__":
    sys.exit(main())
