"""Command-line entry: ``tlpplots <kind> --out FIG csv [csv ...]``."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3


def build_parser():
    ap = argparse.ArgumentParser(
        prog="tlpplots",
        description="Render result figures from simulator stats CSVs")
    ap.add_argument("kind", choices=FIGURE_KINDS)
    ap.add_argument("csv", nargs="+", help="stats CSV files")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--title", default="")
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    spec = FigureSpec(kind=args.kind, csv_paths=args.csv, out=args.out,
                      title=args.title)
    try:
        out = render(spec)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
