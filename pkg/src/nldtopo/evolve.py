"""One-step updates of the level-set field under nonlinear diffusion.

All three schemes are linearly implicit: the nonlinear time weight
q_tilde * (|phi_n| + xi)^(q-1) and the doubly nonlinear diffusivity are
frozen at the previous iterate, so each step is a single SPD solve.  The
evolution carries homogeneous Dirichlet data on the domain boundary except
on configured fixed-material tags, whose nodes are pinned at phi = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .fem import ScalarAssembler, apply_dirichlet, assemble_lumped_mass, solve
from .mesh import TriMesh
from .physics import element_gradients

SCHEMES = ("nld", "nnld", "dnld")


@dataclass
class EvolveParams:
    """Scheme selection and constants for one evolution phase."""

    scheme: str = "nld"
    q: float = 1.0
    q_tilde: float | None = None   # None selects q
    tau: float = 3e-4
    rho: float = 0.7
    dt: float = 0.5
    xi: float = 1e-4
    p: float = 6.0                 # dnld gradient exponent
    gamma: float = 0.1             # dnld diffusivity memory
    h: int = 1                     # nnld inertia toggle

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if self.q <= 0:
            raise ConfigError(f"q must be positive, got {self.q}")
        if self.q_tilde is not None and self.q_tilde not in (1.0, self.q):
            raise ConfigError(f"q_tilde must be 1 or q (= {self.q}), got {self.q_tilde}")
        if self.tau < 0:
            raise ConfigError(f"tau must be nonnegative, got {self.tau}")
        if self.rho < 0:
            raise ConfigError(f"rho must be nonnegative, got {self.rho}")
        if not 0.0 < self.dt < 1.0:
            raise ConfigError(f"dt must lie in (0, 1), got {self.dt}")
        if self.xi <= 0:
            raise ConfigError(f"xi must be positive, got {self.xi}")
        if self.p <= 1:
            raise ConfigError(f"p must exceed 1, got {self.p}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.h not in (0, 1):
            raise ConfigError(f"h must be 0 or 1, got {self.h}")

    @property
    def qt(self) -> float:
        return self.q if self.q_tilde is None else self.q_tilde


@dataclass
class EvolveState:
    """History carried between steps: previous iterate and diffusivity memory."""

    phi_prev: np.ndarray | None = None
    v_prev: np.ndarray | None = None
    step_index: int = 0


class EvolveWorkspace:
    """Cached Laplacian, lumped mass and evolution boundary data for a mesh."""

    def __init__(self, mesh: TriMesh, fixed_material_tags=()):
        self.mesh = mesh
        self.assembler = ScalarAssembler(mesh)
        self.stiffness = self.assembler.stiffness(1.0)
        self.mass = assemble_lumped_mass(mesh)
        bnodes = mesh.boundary_nodes()
        pinned = set()
        for tag in fixed_material_tags:
            pinned.update(mesh.tagged_nodes(tag).tolist())
        values = np.array([1.0 if n in pinned else 0.0 for n in bnodes])
        self.bc_nodes = bnodes
        self.bc_values = values


def time_weights(phi, params: EvolveParams) -> np.ndarray:
    """Nodal degeneracy weight q_tilde (|phi| + xi)^(q-1)."""
    return params.qt * (np.abs(np.asarray(phi, dtype=float)) + params.xi) ** (params.q - 1.0)


def weighted_time_mass(ws: EvolveWorkspace, phi, params: EvolveParams) -> np.ndarray:
    """Row-sum lumping of the weighted mass term: entry i = integral(w psi_i).

    Exact for the P1 interpolant of the weight, so a node's time mass mixes
    the weights of its whole element patch.  Sampling the weight at the node
    alone leaves single near-interface nodes with vanishing inertia, which
    produces period-2 flip-flop orbits under strong reactions.
    """
    w = time_weights(phi, params)[ws.mesh.elements]          # (m, 3)
    contrib = (ws.mesh.areas[:, None] / 12.0) * (w + w.sum(axis=1, keepdims=True))
    return np.bincount(ws.mesh.elements.ravel(), weights=contrib.ravel(),
                       minlength=ws.mesh.n_nodes)


def _nld_system(ws: EvolveWorkspace, phi, reaction, params: EvolveParams):
    mw = weighted_time_mass(ws, phi, params)
    a = sp.diags(mw / params.dt) + params.tau * ws.stiffness
    b = mw * phi / params.dt + params.rho * ws.mass * reaction
    return apply_dirichlet(a.tocsr(), b, ws.bc_nodes, ws.bc_values)


def _enforce_bc(ws: EvolveWorkspace, phi_next: np.ndarray) -> np.ndarray:
    # identity rows are only solved to the CG tolerance; pin them exactly
    phi_next[ws.bc_nodes] = ws.bc_values
    return phi_next


def step_nld(ws: EvolveWorkspace, phi, reaction, params: EvolveParams,
             tol: float = 1e-8) -> np.ndarray:
    """Implicit nonlinear-diffusion step; returns the pre-clip iterate."""
    a, b = _nld_system(ws, phi, reaction, params)
    return _enforce_bc(ws, solve(a, b, tol=tol, x0=np.asarray(phi, dtype=float)))


def _nnld_system(ws, phi, phi_prev, reaction, params: EvolveParams, n: int):
    mw = weighted_time_mass(ws, phi, params)
    damping = 3.0 * params.h / (n + params.xi)
    a = sp.diags(mw * (1.0 + damping) / params.dt) + params.tau * ws.stiffness
    b = (mw * ((1.0 + params.h) * phi - params.h * phi_prev) / params.dt
         + damping * mw * phi / params.dt
         + params.rho * ws.mass * reaction)
    return apply_dirichlet(a.tocsr(), b, ws.bc_nodes, ws.bc_values)


def step_nnld(ws: EvolveWorkspace, phi, phi_prev, reaction, params: EvolveParams,
              n: int, tol: float = 1e-8) -> np.ndarray:
    """Inertial step with 3h/(n + xi) damping; h = 0 reduces to step_nld."""
    a, b = _nnld_system(ws, phi, phi_prev, reaction, params, n)
    return _enforce_bc(ws, solve(a, b, tol=tol, x0=np.asarray(phi, dtype=float)))


def blended_diffusivity(ws: EvolveWorkspace, phi, params: EvolveParams,
                        v_prev) -> np.ndarray:
    """Per-element gamma-blend of |grad phi|^(p-2) with memory, floored at xi."""
    g = element_gradients(ws.mesh, phi)
    gn = np.maximum(np.hypot(g[:, 0], g[:, 1]), 1e-30)
    v = params.gamma * np.asarray(v_prev, dtype=float) + (1.0 - params.gamma) * gn ** (params.p - 2.0)
    return np.maximum(v, params.xi)


def initial_diffusivity(ws: EvolveWorkspace, phi0, params: EvolveParams) -> np.ndarray:
    """Seed memory from the initial field itself, floored at xi per element."""
    phi0 = np.asarray(phi0, dtype=float)
    return np.maximum(phi0[ws.mesh.elements].mean(axis=1), params.xi)


def step_dnld(ws: EvolveWorkspace, phi, reaction, params: EvolveParams,
              v_prev, tol: float = 1e-8):
    """Doubly nonlinear step; returns (pre-clip iterate, updated diffusivity)."""
    v = blended_diffusivity(ws, phi, params, v_prev)
    mw = weighted_time_mass(ws, phi, params)
    a = sp.diags(mw / params.dt) + params.tau * ws.assembler.stiffness(v)
    b = mw * phi / params.dt + params.rho * ws.mass * reaction
    a2, b2 = apply_dirichlet(a.tocsr(), b, ws.bc_nodes, ws.bc_values)
    return _enforce_bc(ws, solve(a2, b2, tol=tol, x0=np.asarray(phi, dtype=float))), v
