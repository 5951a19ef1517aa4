"""Run outputs: history CSV, legacy-ASCII VTK and PGM field snapshots."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .levelset import SmoothingParams, smoothed_chi
from .mesh import TriMesh
from .optimizer import HistoryRow

HISTORY_HEADER = "step,objective,constraint,lambda,linf_update,wall_ms"
FIELD_FORMATS = ("vtk_legacy_ascii", "pgm")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def history_line(row: HistoryRow) -> str:
    return ",".join([str(row.step), _fmt(row.objective), _fmt(row.constraint),
                     _fmt(row.lam), _fmt(row.linf_update), _fmt(row.wall_ms)])


def write_history(history, path) -> None:
    """One CSV row per iteration, decimal text with 17 significant digits."""
    lines = [HISTORY_HEADER]
    lines.extend(history_line(row) for row in history)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_history(path) -> list:
    """Parse a history CSV back into rows (numerically exact round trip)."""
    text = Path(path).read_text(encoding="ascii").strip().splitlines()
    if not text or text[0] != HISTORY_HEADER:
        raise ConfigError(f"{path}: missing history header {HISTORY_HEADER!r}")
    rows = []
    for line in text[1:]:
        parts = line.split(",")
        rows.append(HistoryRow(int(parts[0]), *(float(p) for p in parts[1:])))
    return rows


def write_field(mesh: TriMesh, field, path, format: str = "vtk_legacy_ascii",
                smoothing: SmoothingParams = SmoothingParams()) -> None:
    """Serialize a per-node field.

    ``vtk_legacy_ascii`` writes the raw values as POINT_DATA on the
    triangulation; ``pgm`` rasterizes the smoothed material fraction on the
    node lattice (255 = material, 0 = void, top row = top of the domain).
    """
    field = np.asarray(field, dtype=float)
    if field.shape != (mesh.n_nodes,):
        raise ConfigError(f"field length {field.shape} does not match node count {mesh.n_nodes}")
    if format == "vtk_legacy_ascii":
        _write_vtk(mesh, field, path)
    elif format == "pgm":
        _write_pgm(mesh, field, path, smoothing)
    else:
        raise ConfigError(f"unknown field format {format!r}, expected one of {FIELD_FORMATS}")


def _write_vtk(mesh, field, path):
    out = ["# vtk DataFile Version 2.0", "nldtopo field", "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_nodes} double"]
    out.extend(f"{_fmt(x)} {_fmt(y)} 0" for x, y in mesh.nodes)
    m = mesh.n_elements
    out.append(f"CELLS {m} {4 * m}")
    out.extend(f"3 {a} {b} {c}" for a, b, c in mesh.elements)
    out.append(f"CELL_TYPES {m}")
    out.extend("5" for _ in range(m))
    out.append(f"POINT_DATA {mesh.n_nodes}")
    out.append("SCALARS field double 1")
    out.append("LOOKUP_TABLE default")
    out.extend(_fmt(v) for v in field)
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def _write_pgm(mesh, field, path, smoothing):
    gray = np.rint(255.0 * smoothed_chi(field, smoothing)).astype(int)
    gray = np.clip(gray, 0, 255)
    lattice = gray.reshape(mesh.ny + 1, mesh.nx + 1)
    out = ["P2", f"{mesh.nx + 1} {mesh.ny + 1}", "255"]
    for j in range(mesh.ny, -1, -1):
        out.append(" ".join(str(v) for v in lattice[j]))
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")


def read_pgm(path) -> np.ndarray:
    """Read an ASCII PGM written by write_field back into a (rows, cols) array."""
    tokens = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            tokens.extend(stripped.split())
    if not tokens or tokens[0] != "P2":
        raise ConfigError(f"{path}: not an ASCII PGM file")
    cols, rows, _maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:]], dtype=int)
    return data.reshape(rows, cols)


class FileSink:
    """Streams history rows to ``history.csv`` and periodic field snapshots.

    Rows are flushed immediately so a crashed run leaves a readable history.
    Snapshots are written every ``snapshot_every`` iterations plus the final
    step, in each of the configured formats.
    """

    def __init__(self, outdir, mesh: TriMesh, smoothing: SmoothingParams = SmoothingParams(),
                 snapshot_every: int = 10, formats=("pgm", "vtk_legacy_ascii")):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.mesh = mesh
        self.smoothing = smoothing
        self.snapshot_every = snapshot_every
        self.formats = tuple(formats)
        self._written = set()
        self._fh = open(self.outdir / "history.csv", "w", encoding="ascii")
        self._fh.write(HISTORY_HEADER + "\n")
        self._fh.flush()

    def row(self, row: HistoryRow):
        self._fh.write(history_line(row) + "\n")
        self._fh.flush()

    def snapshot(self, step: int, phi, final: bool = False):
        due = final or (self.snapshot_every > 0 and step % self.snapshot_every == 0)
        if not due or step in self._written:
            return
        self._written.add(step)
        for fmt in self.formats:
            ext = "pgm" if fmt == "pgm" else "vtk"
            write_field(self.mesh, phi, self.outdir / f"snap_{step:06d}.{ext}",
                        format=fmt, smoothing=self.smoothing)

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
