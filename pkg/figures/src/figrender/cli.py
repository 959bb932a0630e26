"""figrender CLI: render harness CSVs into convergence figures."""

import argparse
import sys

from .plots import PlotSpec, load_figure_spec, render
from .reader import SchemaError


def build_parser():
    parser = argparse.ArgumentParser(prog="figrender")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one CSV to an image")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default=None,
                   help="named layout; omit to use the generic axes flags")
    p.add_argument("--x", default="matvecs",
                   choices=["matvecs", "iterations", "gap_size"])
    p.add_argument("--series", default="block_size")
    p.add_argument("--yscale", default="log", choices=["log", "linear"])
    p.add_argument("--xscale", default="linear", choices=["log", "linear"])
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.preset:
            spec = load_figure_spec(args.csv, args.preset, output_path=args.out)
        else:
            spec = PlotSpec(csv_path=args.csv, x=args.x, series_key=args.series,
                            yscale=args.yscale, xscale=args.xscale,
                            panels=(args.yscale,), output_path=args.out)
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and fail
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
