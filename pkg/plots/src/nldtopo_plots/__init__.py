"""Post-processing figures for nldtopo run outputs."""

from .figures import PlotSpec, plot_convergence, plot_objective, snapshot_grid
from .io import FormatError, read_history_csv, read_pgm

__version__ = "0.1.0"
