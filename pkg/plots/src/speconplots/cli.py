"""Command line wrapper: speconsim-plots render --kind <k> --in <dir> --out <file>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, PlotSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speconsim-plots",
                                     description="Render figures from speconsim CSV reports")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--in", dest="input_dir", required=True, help="report directory")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title", default="", help="figure title")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(kind=args.kind, input_dir=Path(args.input_dir),
                    output=Path(args.out), title=args.title)
    try:
        result = render(spec)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    drawn = f"{result.bars} job pairs" if result.bars else f"{result.panels} panels"
    print(f"{args.kind}: {drawn} -> {result.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
