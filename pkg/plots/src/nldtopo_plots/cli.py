"""Console entries: plot-objective, plot-convergence, snapshot-grid."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot_convergence, plot_objective, snapshot_grid
from .io import FormatError


def _curve_parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--in", dest="inputs", required=True,
                    help="glob of history CSV files")
    ap.add_argument("--out", dest="output", required=True, help="output image path")
    ap.add_argument("--label", action="append", default=[],
                    help="series label (repeat per input, in sorted order)")
    ap.add_argument("--log", action="store_true", help="log scale on the y axis")
    return ap


def _run_curve(plot_fn, description: str, argv) -> int:
    args = _curve_parser(description).parse_args(argv)
    spec = PlotSpec(inputs=args.inputs, output=args.output,
                    labels=tuple(args.label), log_scale=args.log)
    try:
        out = plot_fn(spec)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


def objective_main(argv=None) -> int:
    return _run_curve(plot_objective, "Objective-versus-step curves.", argv)


def convergence_main(argv=None) -> int:
    return _run_curve(plot_convergence,
                      "Update-norm curves with the stop threshold marked.", argv)


def grid_main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Tile PGM snapshots into a labeled grid.")
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    help="snapshot PGM files")
    ap.add_argument("--out", dest="output", required=True)
    ap.add_argument("--layout", help="rows x cols, e.g. 2x2 (default: near square)")
    args = ap.parse_args(argv)
    layout = None
    if args.layout:
        try:
            rows, cols = (int(v) for v in args.layout.lower().split("x"))
            layout = (rows, cols)
        except ValueError:
            print(f"error: bad layout {args.layout!r}, expected ROWSxCOLS", file=sys.stderr)
            return 2
    try:
        out = snapshot_grid(args.inputs, args.output, layout)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0
