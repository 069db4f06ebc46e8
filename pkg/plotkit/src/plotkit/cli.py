"""plotkit command line: render figures from a run directory.

    plotkit render <run-dir> --kind duct-map --out map.png

`ramp-sectors` takes the JSON file written by the solver's ramp
subcommand instead of a run directory."""

import argparse
import json
import sys

from .render import render, FIGURE_KINDS


def build_parser():
    ap = argparse.ArgumentParser(prog="plotkit")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure")
    p.add_argument("path", help="run directory (or ramp JSON for "
                                "ramp-sectors)")
    p.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    p.add_argument("--out", required=True, help="output image (.png/.svg)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        info = render(args.path, args.kind, args.out)
    except FileNotFoundError as err:
        print(f"missing input: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(json.dumps({"out": args.out, **info}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
