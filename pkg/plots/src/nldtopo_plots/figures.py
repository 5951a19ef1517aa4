"""Figure builders: objective curves, update-norm curves, snapshot grids."""

from __future__ import annotations

import glob
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import FormatError, read_history_csv, read_pgm, snapshot_step

STOP_THRESHOLD = 1e-2


@dataclass
class PlotSpec:
    """Inputs for one curve figure: a CSV glob, labels, scale, output path."""

    inputs: str
    output: str
    labels: tuple = ()
    log_scale: bool = False

    def resolve(self) -> list:
        paths = sorted(glob.glob(self.inputs))
        if not paths:
            raise FormatError(f"no history files match {self.inputs!r}")
        return paths

    def label_for(self, index: int, path: str) -> str:
        if index < len(self.labels):
            return self.labels[index]
        return Path(path).stem


def _curve_figure(spec: PlotSpec, column: str, ylabel: str, reference=None):
    paths = spec.resolve()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, path in enumerate(paths):
        data = read_history_csv(path)
        ax.plot(data["step"], data[column], label=spec.label_for(i, path))
    if reference is not None:
        ax.axhline(reference, color="black", linestyle="--", linewidth=0.8,
                   label=f"threshold {reference:g}")
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    if spec.log_scale:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def build_objective_figure(spec: PlotSpec):
    return _curve_figure(spec, "objective", "objective")


def build_convergence_figure(spec: PlotSpec):
    return _curve_figure(spec, "linf_update", "sup-norm of level-set update",
                         reference=STOP_THRESHOLD)


def _save(fig, output) -> str:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return str(out)


def plot_objective(spec: PlotSpec) -> str:
    """Objective value per step, one curve per matched history file."""
    return _save(build_objective_figure(spec), spec.output)


def plot_convergence(spec: PlotSpec) -> str:
    """Update-norm curves with the stop threshold drawn as a reference line."""
    return _save(build_convergence_figure(spec), spec.output)


def build_grid_figure(snapshot_paths, layout=None):
    """Tile PGM snapshots into a labeled panel grid."""
    paths = list(snapshot_paths)
    if not paths:
        raise FormatError("no snapshots given")
    images = [read_pgm(p) for p in paths]
    shape = images[0].shape
    for p, img in zip(paths, images):
        if img.shape != shape:
            raise FormatError(f"{p}: image size {img.shape} differs from {shape}")
    if layout is None:
        cols = int(np.ceil(np.sqrt(len(images))))
        rows = int(np.ceil(len(images) / cols))
    else:
        rows, cols = layout
        if rows * cols < len(images):
            raise FormatError(f"layout {rows}x{cols} too small for {len(images)} panels")
    fig, axes = plt.subplots(rows, cols, figsize=(2.4 * cols, 2.4 * rows * shape[0] / shape[1]),
                             squeeze=False)
    for ax in axes.ravel():
        ax.axis("off")
    for ax, path, img in zip(axes.ravel(), paths, images):
        ax.imshow(img, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        step = snapshot_step(path)
        ax.set_title(f"Step {step}" if step is not None else Path(path).stem, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    return fig


def snapshot_grid(snapshot_paths, output, layout=None) -> str:
    return _save(build_grid_figure(snapshot_paths, layout), output)
