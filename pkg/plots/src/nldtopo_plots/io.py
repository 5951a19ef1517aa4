"""Readers for the optimizer's on-disk contracts: history CSV and ASCII PGM.

These parsers are deliberately standalone so the plotting tools depend only
on the documented file formats, not on the optimizer package.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

HISTORY_COLUMNS = ("step", "objective", "constraint", "lambda", "linf_update", "wall_ms")


class FormatError(ValueError):
    """Input file does not follow the expected contract."""


def read_history_csv(path) -> dict:
    """Parse a run history CSV into a column dict of numpy arrays."""
    path = Path(path)
    lines = path.read_text(encoding="ascii").strip().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    header = lines[0].split(",")
    missing = [c for c in HISTORY_COLUMNS if c not in header]
    if missing:
        raise FormatError(f"{path}: missing column(s) {missing}")
    if len(lines) == 1:
        raise FormatError(f"{path}: no data rows after the header")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return {name: rows[:, header.index(name)] for name in HISTORY_COLUMNS}


def read_pgm(path) -> np.ndarray:
    """Parse an ASCII (P2) PGM into a (rows, cols) integer array."""
    path = Path(path)
    tokens: list[str] = []
    for line in path.read_text(encoding="ascii").splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend(body.split())
    if not tokens or tokens[0] != "P2":
        raise FormatError(f"{path}: not an ASCII PGM (P2) file")
    cols, rows, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:]], dtype=int)
    if data.size != rows * cols:
        raise FormatError(f"{path}: expected {rows * cols} samples, found {data.size}")
    if maxval <= 0:
        raise FormatError(f"{path}: nonpositive maxval")
    return data.reshape(rows, cols)


def snapshot_step(path) -> int | None:
    """Extract the iteration index from a snap_NNNNNN-style filename."""
    stem = Path(path).stem
    digits = stem.rsplit("_", 1)[-1]
    return int(digits) if digits.isdigit() else None
