"""CLI: render one figure from a sweep CSV.

    figplots plot --csv out/fig5.csv --figure fig5 --out fig5.png
"""

from __future__ import annotations

import argparse
import sys

from .render import render_figure
from .schema import FIGURES, SchemaError


def build_parser():
    parser = argparse.ArgumentParser(prog="figplots")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render a figure from a sweep CSV")
    plot.add_argument("--csv", required=True)
    plot.add_argument("--figure", required=True, choices=FIGURES)
    plot.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        drawn = render_figure(args.csv, args.figure, args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not drawn:
        print("warning: nothing to plot (no aggregate rows)", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({', '.join(drawn)})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
