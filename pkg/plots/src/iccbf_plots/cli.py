"""Command line for the trace plotter.

    iccbf-plots --trace A.csv [--trace B.csv ...] \
                --panels state,input,barrier --out fig.png
"""

from __future__ import annotations

import argparse
import sys

from .render import PANELS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iccbf-plots",
        description="Render comparison figures from iccbf CSV traces",
    )
    p.add_argument("--trace", action="append", required=True,
                   help="trace CSV (repeat for overlays, first is primary)")
    p.add_argument("--panels", default="state,input,barrier",
                   help=f"comma-separated subset of {','.join(PANELS)}")
    p.add_argument("--out", required=True, help="output image (.png or .svg)")
    p.add_argument("--labels", default="", help="comma-separated curve labels")
    p.add_argument("--format", dest="image_format", default="",
                   choices=["", "png", "svg"])
    p.add_argument("--envelope", default="symmetric",
                   choices=["symmetric", "upper"],
                   help="input-panel bound: +/-kappa or kappa only")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    panels = tuple(s.strip() for s in args.panels.split(",") if s.strip())
    labels = tuple(s.strip() for s in args.labels.split(",") if s.strip())
    try:
        spec = FigureSpec(
            traces=tuple(args.trace),
            panels=panels,
            out=args.out,
            labels=labels,
            image_format=args.image_format,
            envelope=args.envelope,
        )
        out = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
