#!/usr/bin/env python3
"""Record a small cantilever sweep used by the plotting package's tests.

Runs q in {1, 2} on a coarse cantilever and copies history files plus a few
snapshots into plots/tests/data/.  The outputs are deterministic, so the
recorded fixtures only change when the optimizer itself changes.
"""

import shutil
import sys
from pathlib import Path

from nldtopo.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "plots" / "tests" / "data"


def main() -> int:
    work = ROOT / "build" / "demo_sweep"
    cfg = work / "sweep.yaml"
    work.mkdir(parents=True, exist_ok=True)
    cfg.write_text(
        "benchmark: cantilever\nnx: 16\nny: 10\n"
        "overrides: {max_steps: 40}\nsnapshot_every: 10\n",
        encoding="utf-8",
    )
    code = cli_main(["sweep", str(cfg), "--grid", "q=1,2", "--out", str(work)])
    if code != 0:
        return code
    DATA.mkdir(parents=True, exist_ok=True)
    for q in (1, 2):
        src = work / f"q{q}"
        shutil.copy(src / "history.csv", DATA / f"cantilever_q{q}.csv")
        for snap in sorted(src.glob("snap_*.pgm")):
            shutil.copy(snap, DATA / f"q{q}_{snap.name}")
    print(f"recorded fixtures in {DATA}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
