"""Command line entry point: bubblefig --figure ID --in DIR --out PATH."""

import argparse
import sys

from .errors import FigureError
from .render import FIGURE_IDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bubblefig",
        description="Render figures from simulation sweep CSV outputs.",
    )
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS)
    parser.add_argument(
        "--in", dest="input_dir", required=True, metavar="DIR",
        help="directory holding the sweep CSV artifacts",
    )
    parser.add_argument("--out", required=True, metavar="PATH")
    parser.add_argument(
        "--filter", action="append", default=[], metavar="KEY=VALUE",
        help="keep only rows where column KEY equals VALUE (repeatable)",
    )
    parser.add_argument(
        "--png", action="store_true", help="write PNG instead of the default SVG"
    )
    return parser


def parse_filters(pairs: list[str], parser: argparse.ArgumentParser) -> dict:
    filters = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            parser.error(f"--filter expects KEY=VALUE, got {pair!r}")
        filters[key] = value
    return filters


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    spec = FigureSpec(
        figure_id=args.figure,
        input_dir=args.input_dir,
        output=args.out,
        filters=parse_filters(args.filter, parser),
        png=args.png,
    )
    try:
        path = render(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
