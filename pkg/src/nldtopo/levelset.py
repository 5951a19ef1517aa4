"""Level-set field utilities: clipping, smoothed material fraction, delta weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .mesh import TriMesh

DELTA_MODES = ("uniform", "indicator")


@dataclass(frozen=True)
class SmoothingParams:
    """Half-width of the material ramp, delta-weight width, ersatz floor.

    ``delta_mode`` selects the sensitivity weight: "indicator" restricts it
    to the band 0 <= phi <= eta (the default; soft void regions otherwise
    feed their inflated strain energy back as growth and the design rings),
    "uniform" extends it to the whole domain.
    """

    delta: float = 0.8
    eta: float = 1.0
    chi_floor: float = 1e-2
    delta_mode: str = "indicator"

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.eta <= 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.chi_floor < 1.0:
            raise ConfigError(f"chi_floor must lie in (0, 1), got {self.chi_floor}")
        if self.delta_mode not in DELTA_MODES:
            raise ConfigError(f"unknown delta mode {self.delta_mode!r}, expected {DELTA_MODES}")


def clip(raw) -> np.ndarray:
    """Clamp to [-1, 1]: values keep their sign, excess maps to +-1."""
    return np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)


def smoothed_chi(phi, params: SmoothingParams) -> np.ndarray:
    """Quintic material ramp: 0 below -delta, 1 above +delta, C1 at both ends."""
    t = np.asarray(phi, dtype=float) / params.delta
    tc = np.clip(t, -1.0, 1.0)
    return 0.5 + tc * (15.0 / 16.0 + tc * tc * (-5.0 / 8.0 + tc * tc * (3.0 / 16.0)))


def chi_prime(phi, params: SmoothingParams) -> np.ndarray:
    """Derivative of the ramp w.r.t. phi; vanishes outside |phi| < delta."""
    t = np.asarray(phi, dtype=float) / params.delta
    inside = np.abs(t) < 1.0
    one_minus = 1.0 - t * t
    return np.where(inside, (15.0 / 16.0) * one_minus * one_minus / params.delta, 0.0)


def element_chi(mesh: TriMesh, phi, params: SmoothingParams) -> np.ndarray:
    """Per-element material fraction: mean of the three nodal ramp values."""
    chi = smoothed_chi(phi, params)
    return chi[mesh.elements].mean(axis=1)


def element_material(mesh: TriMesh, phi, params: SmoothingParams, floor=None) -> np.ndarray:
    """Element fraction clamped below by the ersatz floor for state solves."""
    f = params.chi_floor if floor is None else floor
    return np.maximum(element_chi(mesh, phi, params), f)


def delta_factor(phi, params: SmoothingParams) -> np.ndarray:
    """Sensitivity weight: 1 everywhere (uniform) or 1 on [0 <= phi <= eta]."""
    phi = np.asarray(phi, dtype=float)
    if params.delta_mode == "uniform":
        return np.ones_like(phi)
    if params.delta_mode == "indicator":
        return np.where((phi >= 0.0) & (phi <= params.eta), 1.0, 0.0)
    raise ConfigError(f"unknown delta mode {params.delta_mode!r}")
