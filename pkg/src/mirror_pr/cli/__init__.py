"""``mirror-pr <experiment> --config <path> [--seed N] [--out <dir>]``.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numerical abort.
"""

from __future__ import annotations

import argparse
import sys

from ..solver import NumericalAbort
from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import RUNNERS

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_ABORT"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mirror-pr", description="Phase-retrieval experiments with mirror descent.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="path to a key = value config file")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--out", default=None, help="output directory (overrides [run] output)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative", None, "command line")
            cfg.set("run.seed", args.seed)
        out_dir = args.out if args.out is not None else cfg["run.output"]
        RUNNERS[args.experiment](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
