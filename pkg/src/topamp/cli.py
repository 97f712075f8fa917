"""Command-line front end: ``topamp run | list-presets | validate``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import list_presets, load_config
from .errors import ConfigurationError, NumericalError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _origin(exc: BaseException) -> str:
    """Innermost ``topamp`` module in the traceback of ``exc``."""
    module = "topamp"
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename)
        if path.parent.name == "topamp":
            module = f"topamp.{path.stem}"
    return module


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topamp", description=__doc__)
    p.add_argument("--version", action="version", version=f"topamp {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config or bundled preset")
    run.add_argument("config", help="path to a TOML config, or a preset name such as fig4b")
    run.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: TOPAMP_THREADS or all cores)")
    run.add_argument("-o", "--output", type=Path, default=None, help="override output.directory")
    run.add_argument("--plot", action="store_true", help="also render PNG figures where supported")

    sub.add_parser("list-presets", help="list bundled figure presets")

    val = sub.add_parser("validate", help="check a config against the schema without running it")
    val.add_argument("config")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "list-presets":
        for name, desc in list_presets():
            print(f"{name:10s} {desc}")
        return 0

    try:
        cfg = load_config(args.config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"{args.config}: ok (task {cfg.task})")
        return 0

    if args.output is not None:
        cfg.output_dir = args.output
    if args.plot:
        cfg.plot = True
    workers = args.threads
    if workers is not None and workers < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if workers is None and os.environ.get("TOPAMP_THREADS"):
        try:
            workers = int(os.environ["TOPAMP_THREADS"])
        except ValueError:
            print("error: TOPAMP_THREADS must be an integer", file=sys.stderr)
            return EXIT_CONFIG

    from .runner import run_experiment

    try:
        result = run_experiment(cfg, workers)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {len(result.files)} files to {result.directory}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
