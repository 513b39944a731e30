"""Command-line entry point: ``reid <command> [flags]``.

Exit codes: 0 on success, 1 on validation or usage errors, 2 on I/O errors.
"""
from __future__ import annotations

import argparse
from collections.abc import Sequence
from typing import Callable, Optional

from pydantic import ValidationError

from app.cli.commands import cmd_eval, cmd_fit_st, cmd_rank, cmd_synth, cmd_train_toy
from app.cli.parser import build_parser
from app.cli.sweep import cmd_sweep
from app.config import EngineConfig, get_settings, load_config
from app.errors import ReidError
from app.logger import configure_logging, logger

Handler = Callable[[argparse.Namespace, EngineConfig], int]

COMMANDS: dict[str, Handler] = {
    "synth": cmd_synth,
    "fit-st": cmd_fit_st,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "train-toy": cmd_train_toy,
    "sweep": cmd_sweep,
}


def resolve_config(args: argparse.Namespace) -> EngineConfig:
    """Config file (or environment), then explicit flags on top."""
    base = load_config(args.config) if args.config else get_settings()
    flags = {name: getattr(args, name) for name in EngineConfig.model_fields if hasattr(args, name)}
    return base.with_overrides(**flags)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        configure_logging(config.log_level)
        return COMMANDS[args.command](args, config)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ReidError, ValidationError) as exc:
        configure_logging()
        logger.error("%s", exc)
        return 1
    except OSError as exc:
        configure_logging()
        logger.error("I/O error: %s", exc)
        return 2
