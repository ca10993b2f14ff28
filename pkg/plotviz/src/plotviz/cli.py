"""plotviz command line: `plotviz --kind fer --in a.csv b.csv --labels A B
--out fig.svg`."""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, SchemaError, render


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="plotviz", description="Plot coopstc CSV result tables"
    )
    ap.add_argument("--kind", required=True, choices=("fer", "outage", "dmt"))
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    metavar="CSV", help="input result tables")
    ap.add_argument("--labels", nargs="*", default=[], help="series labels")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--xlim", nargs=2, type=float, metavar=("LO", "HI"))
    ap.add_argument("--ylim", nargs=2, type=float, metavar=("LO", "HI"))
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = PlotSpec(
            kind=args.kind,
            inputs=tuple(args.inputs),
            labels=tuple(args.labels),
            output=args.out,
            xlim=tuple(args.xlim) if args.xlim else None,
            ylim=tuple(args.ylim) if args.ylim else None,
        )
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        out = render(spec)
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
