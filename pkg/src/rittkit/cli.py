"""``rittkit <command> --config <path> [--seed S] [--out DIR]``.

Exit codes: 0 success, 2 invalid config, 3 dimension guard exceeded,
4 numerical or precondition failure.
"""

import argparse
import json
import sys

from .exceptions import ConfigurationError, RittkitError
from .report import COMMANDS, run, write_report

EXIT_OK, EXIT_VALIDATION = 0, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="rittkit", description="Ritt operator and Stolz-domain analyses.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    return parser


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"config: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config: {path} is not valid JSON ({exc})") from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load(args.config)
        report = run(config, seed=args.seed, command=args.command)
        paths = write_report(report, args.out)
    except RittkitError as exc:
        print(f"rittkit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
