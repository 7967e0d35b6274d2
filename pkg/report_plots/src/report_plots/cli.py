"""Batch plotting script for experiment artifacts.

    report-plots --report DIR --out DIR [--check FILE] [--format png|svg]

Renders the rate panels from DIR/report.json + DIR/samples.csv into the
output directory, and optionally the diagnostic panels from a check.json.
Exit code 0 on success, 2 on missing or invalid inputs, with the reason on
stderr.  Written paths are printed to stdout.
"""

from __future__ import annotations

import argparse
import sys

from . import render_check_plot, render_rate_plot


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="report-plots", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--report", required=True,
        help="directory holding report.json and samples.csv (or the report.json path)",
    )
    parser.add_argument("--out", required=True, help="directory for the rendered images")
    parser.add_argument("--check", help="optional check.json to render as diagnostic panels")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    written = []
    try:
        written.append(render_rate_plot(args.report, args.out, fmt=args.format))
        if args.check:
            written.append(render_check_plot(args.check, args.out, fmt=args.format))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
