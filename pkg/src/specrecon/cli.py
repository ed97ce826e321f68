"""Command-line entry point.

    specrecon <command> --config <path> [--set key=value]... [--out dir]

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .config import COMMANDS, apply_overrides, parse_config, validate_config
from .errors import ConfigParseError, SpecreconError
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specrecon",
        description="Population covariance spectrum reconstruction experiments.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="path to a key=value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="key=value",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--out", default=None, help="output directory override")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            try:
                text = open(args.config, encoding="utf-8").read()
            except OSError as exc:
                print(f"specrecon: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            cfg = parse_config(text)
        else:
            cfg = parse_config("")
        overrides = [f"command={args.command}"] + list(args.overrides)
        if args.out is not None:
            overrides.append(f"output_dir={args.out}")
        cfg = apply_overrides(cfg, overrides)
        validate_config(cfg)
    except ConfigParseError as exc:
        print(f"specrecon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        manifest = run_experiment(cfg)
    except ConfigParseError as exc:
        print(f"specrecon: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"specrecon: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpecreconError, ArithmeticError, ValueError) as exc:
        print(f"specrecon: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    print(f"specrecon: wrote {len(manifest)} files + manifest.json to {cfg.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
