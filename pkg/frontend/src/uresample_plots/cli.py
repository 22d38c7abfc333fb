"""plot: render figures from report CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_coverage, plot_dkw, plot_fwer
from .report import SchemaError

EXIT_OK = 0
EXIT_SCHEMA = 2

_COMMANDS = {
    "coverage": (plot_coverage, "coverage vs configuration with nominal line and 3 SE band"),
    "fwer": (plot_fwer, "error-rate bars with the target level line"),
    "dkw": (plot_dkw, "tail-deviation frequency vs its block bound"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot", description="Render figures from uniform-resample-report v1 CSV files.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("csv", help="report CSV path")
        cmd.add_argument("-o", "--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = _COMMANDS[args.command][0]
    try:
        out = fn(args.csv, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
