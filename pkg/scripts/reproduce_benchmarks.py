#!/usr/bin/env python3
"""Reproduce the headline benchmark comparisons and write their outputs.

Runs the exponent comparisons on all five problems (plus the inertial
variant) at desk-scale resolution and prints a summary table.  Full outputs
(history CSV and snapshots) land in --out/<run label>/.

Usage:
    python scripts/reproduce_benchmarks.py [--out results] [--quick]
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import nldtopo as nt
from nldtopo.output import FileSink

COMPARISONS = [
    # (benchmark, label, overrides, init override, max_steps)
    ("cantilever", "cantilever_q1", {"q": 1.0}, None, None),
    ("cantilever", "cantilever_q4", {"q": 4.0}, None, None),
    ("mbb", "mbb_q1", {"q": 1.0}, None, None),
    ("mbb", "mbb_q2", {"q": 2.0}, None, None),
    ("bridge", "bridge_q1", {"q": 1.0}, None, None),
    ("bridge", "bridge_q8", {"q": 8.0}, None, None),
    ("mechanism", "mechanism_q1_dt05", {"q": 1.0, "dt": 0.5}, None, 500),
    ("mechanism", "mechanism_q05_dt05", {"q": 0.5, "dt": 0.5}, None, 500),
    ("heat_low_alpha", "heat_low_q1", {"q": 1.0}, None, None),
    ("heat_high_alpha", "heat_high_q1", {"q": 1.0}, None, None),
    ("heat_high_alpha", "heat_high_q05", {"q": 0.5}, None, None),
    ("cantilever", "upper_nld_q1", {"q": 1.0}, "upper_half", None),
    ("cantilever", "upper_nld_q5", {"q": 5.0}, "upper_half", None),
    ("cantilever", "upper_nnld_q5", {"q": 5.0, "scheme": "nnld"}, "upper_half", None),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true",
                    help="coarser meshes and a small step budget (smoke run)")
    args = ap.parse_args(argv)
    base = Path(args.out)

    # quick-mode meshes must still resolve every tagged boundary patch
    quick_size = {"cantilever": (20, 10), "mbb": (20, 10), "bridge": (20, 10),
                  "mechanism": (16, 16), "heat_low_alpha": (16, 16),
                  "heat_high_alpha": (16, 16)}

    print(f"{'run':24s} {'reason':12s} {'steps':>6s} {'F_final':>12s} {'wall':>7s}")
    for name, label, overrides, init, cap in COMPARISONS:
        nx, ny = quick_size[name] if args.quick else (None, None)
        setup = nt.benchmark(name, nx=nx, ny=ny)
        setup = nt.override_params(setup, **overrides)
        if init:
            setup = replace(setup, init_kind=init)
        if cap or args.quick:
            setup = replace(setup, stop=replace(setup.stop,
                                                max_steps=20 if args.quick else cap))
        sink = FileSink(base / label, setup.mesh, setup.smoothing)
        t0 = time.perf_counter()
        try:
            result = setup.execute(sink=sink)
        finally:
            sink.close()
        wall = time.perf_counter() - t0
        f = result.history[-1].objective if result.history else float("nan")
        print(f"{label:24s} {result.reason:12s} {result.steps:6d} {f:12.5g} {wall:6.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
