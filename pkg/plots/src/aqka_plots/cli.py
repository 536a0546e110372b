"""Command-line figure rendering: aqka-plot --family <name> --in <csv> --out <png>."""

from __future__ import annotations

import argparse
import sys

from .render import FAMILIES, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqka-plot")
    parser.add_argument("--family", required=True, choices=FAMILIES)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        help="record CSVs (or a plan CSV for heatmap)")
    parser.add_argument("--out", required=True, help="output image path (png/svg)")
    parser.add_argument("--anchors", help="anchors file for the heatmap family")
    parser.add_argument("--title", default="")
    parser.add_argument("--linear-x", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        inputs=args.inputs,
        family=args.family,
        out_path=args.out,
        log_x=not args.linear_x,
        anchors_path=args.anchors,
        title=args.title,
    )
    try:
        meta = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    if meta:
        print(meta)
    return 0


if __name__ == "__main__":
    sys.exit(main())
