"""State solves, objectives, sensitivity fields and constraint bookkeeping.

Three physics are supported: minimum mean compliance, a compliant mechanism
with boundary springs (state plus adjoint solve), and two-phase steady heat
conduction.  Sensitivities are recovered per element as energy densities at
full material stiffness, projected to nodes by area-weighted averaging, and
weighted by the approximated delta factor.  The augmented-Lagrangian volume
multiplier update lives here as well.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OracleError
from .fem import (
    DofMap,
    ElasticAssembler,
    ScalarAssembler,
    apply_dirichlet,
    assemble_lumped_mass,
    boundary_load,
    boundary_spring,
    solve,
    vector_dofs,
    voigt_plane_strain,
)
from .levelset import SmoothingParams, delta_factor, element_chi, element_material, smoothed_chi
from .mesh import TriMesh

logger = logging.getLogger(__name__)

KINDS = ("compliance", "mechanism", "heat")


@dataclass
class ElasticitySpec:
    """Material constants, loads and supports for the elasticity problems.

    ``dirichlet`` is a tuple of (tag, components) pairs; components index the
    constrained displacement directions.  The spring and output-traction
    fields are only used by the mechanism problem.
    """

    young: float = 2.1e11
    poisson: float = 0.3
    traction: tuple = (0.0, -1.0e3)
    traction_tag: str = "load"
    dirichlet: tuple = (("clamp", (0, 1)),)
    spring_in: tuple | None = None      # (tag, 2x2 matrix)
    spring_out: tuple | None = None
    out_traction: tuple | None = None   # (tag, vector)

    def __post_init__(self):
        if self.young <= 0:
            raise ConfigError(f"Young's modulus must be positive, got {self.young}")
        if not 0.0 < self.poisson < 0.5:
            raise ConfigError(f"Poisson ratio must lie in (0, 0.5), got {self.poisson}")


@dataclass
class HeatSpec:
    """Two-phase conductivity (alpha in material, beta in void), uniform source."""

    alpha: float = 1.0
    beta: float = 1e-2
    source: float = 1.0
    dirichlet: tuple = ("sink",)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("conductivities must be positive")


@dataclass
class ConstraintState:
    """Volume bound with its augmented-Lagrangian multiplier."""

    g_max: float
    lam: float = 0.0
    mu: float = 3.0

    def __post_init__(self):
        if not 0.0 < self.g_max < 1.0:
            raise ConfigError(f"volume fraction bound must lie in (0, 1), got {self.g_max}")
        if self.lam < 0:
            raise ConfigError("multiplier must be nonnegative")


@dataclass
class ProblemSpec:
    """Physics selection plus the volume constraint for one optimization run."""

    kind: str
    elasticity: ElasticitySpec | None = None
    heat: HeatSpec | None = None
    g_max: float = 0.5
    mu: float = 3.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown physics kind {self.kind!r}, expected one of {KINDS}")
        if self.kind in ("compliance", "mechanism") and self.elasticity is None:
            raise ConfigError(f"{self.kind} problem needs an elasticity spec")
        if self.kind == "heat" and self.heat is None:
            raise ConfigError("heat problem needs a heat spec")
        if self.kind == "mechanism":
            if self.elasticity.out_traction is None:
                raise ConfigError("mechanism problem needs an output traction")


def nodal_average(mesh: TriMesh, elem_values) -> np.ndarray:
    """Area-weighted projection of a per-element field onto nodes."""
    elem_values = np.asarray(elem_values, dtype=float)
    w = np.repeat(mesh.areas / 3.0, 3)
    num = np.bincount(mesh.elements.ravel(), weights=w * np.repeat(elem_values, 3),
                      minlength=mesh.n_nodes)
    den = np.bincount(mesh.elements.ravel(), weights=w, minlength=mesh.n_nodes)
    return num / den


def element_gradients(mesh: TriMesh, u_nodal) -> np.ndarray:
    """Constant per-element gradient of a nodal scalar field."""
    u_nodal = np.asarray(u_nodal, dtype=float)
    return np.einsum("eid,ei->ed", mesh.grads, u_nodal[mesh.elements])


def elasticity_dofmap(mesh: TriMesh, spec: ElasticitySpec) -> DofMap:
    chunks = [vector_dofs(mesh.tagged_nodes(tag), tuple(comps))
              for tag, comps in spec.dirichlet]
    dofs = np.unique(np.concatenate(chunks)) if chunks else np.empty(0, np.int64)
    if dofs.size == 0:
        raise ConfigError("elasticity needs a nonempty Dirichlet set (rigid modes otherwise)")
    return DofMap(2, mesh.n_nodes, dofs, np.zeros(dofs.size))


# ---------------------------------------------------------------------------
# minimum mean compliance


def solve_compliance_state(mesh, phi, spec, smoothing=SmoothingParams(),
                           assembler=None, tol=1e-8, x0=None):
    """Displacement under the boundary traction and the compliance value."""
    assembler = assembler or ElasticAssembler(mesh, spec.poisson)
    e_eff = spec.young * element_material(mesh, phi, smoothing)
    a = assembler.stiffness(e_eff)
    f = boundary_load(mesh, spec.traction_tag, spec.traction)
    dm = elasticity_dofmap(mesh, spec)
    a2, f2 = apply_dirichlet(a, f, dm.dirichlet_dofs, dm.dirichlet_values)
    u = solve(a2, f2, tol=tol, x0=x0)
    return u, float(f @ u)


def _strain_energy_density(assembler, u, v, young):
    """Mutual strain energy density per element at full stiffness."""
    d = voigt_plane_strain(assembler.nu) * young
    eu = assembler.element_strains(u)
    ev = eu if v is u else assembler.element_strains(v)
    return np.einsum("ei,ij,ej->e", eu, d, ev)


def compliance_sensitivity(mesh, phi, u, spec, smoothing=SmoothingParams(), assembler=None):
    """Nodal strain-energy density times the delta weight (nonnegative)."""
    assembler = assembler or ElasticAssembler(mesh, spec.poisson)
    dens = _strain_energy_density(assembler, u, u, spec.young)
    return nodal_average(mesh, dens) * delta_factor(phi, smoothing)


# ---------------------------------------------------------------------------
# compliant mechanism


def _mechanism_matrix(mesh, phi, spec, smoothing, assembler):
    a = assembler.stiffness(spec.young * element_material(mesh, phi, smoothing))
    for spring in (spec.spring_in, spec.spring_out):
        if spring is not None:
            tag, mat = spring
            a = a - boundary_spring(mesh, tag, np.asarray(mat, dtype=float))
    return a.tocsr()


def solve_mechanism(mesh, phi, spec, smoothing=SmoothingParams(),
                    assembler=None, tol=1e-8, x0=None, x0_adjoint=None):
    """State and adjoint displacements plus the (negated) output work.

    The state carries the input traction; the adjoint problem shares the
    matrix and is loaded with the negated output traction.
    """
    if spec.out_traction is None:
        raise ConfigError("mechanism solve needs an output traction")
    assembler = assembler or ElasticAssembler(mesh, spec.poisson)
    a = _mechanism_matrix(mesh, phi, spec, smoothing, assembler)
    f_in = boundary_load(mesh, spec.traction_tag, spec.traction)
    out_tag, out_t = spec.out_traction
    f_out = boundary_load(mesh, out_tag, out_t)
    dm = elasticity_dofmap(mesh, spec)
    a2, b_state = apply_dirichlet(a, f_in, dm.dirichlet_dofs, dm.dirichlet_values)
    b_adj = -f_out
    b_adj[dm.dirichlet_dofs] = 0.0
    u = solve(a2, b_state, tol=tol, x0=x0)
    u_adj = solve(a2, b_adj, tol=tol, x0=x0_adjoint)
    return u, u_adj, -float(f_out @ u)


def mechanism_sensitivity(mesh, phi, u, u_adj, spec, smoothing=SmoothingParams(),
                          assembler=None):
    """Adjoint estimate of the objective derivative: minus the mutual
    strain-energy density, times the delta weight.  The optimizer negates
    this field to obtain its growth/shrink reaction."""
    assembler = assembler or ElasticAssembler(mesh, spec.poisson)
    dens = _strain_energy_density(assembler, u, u_adj, spec.young)
    return -nodal_average(mesh, dens) * delta_factor(phi, smoothing)


# ---------------------------------------------------------------------------
# heat conduction


def heat_dirichlet_nodes(mesh: TriMesh, spec: HeatSpec) -> np.ndarray:
    nodes = [mesh.tagged_nodes(tag) for tag in spec.dirichlet]
    out = np.unique(np.concatenate(nodes)) if nodes else np.empty(0, np.int64)
    if out.size == 0:
        raise ConfigError("heat problem needs a nonempty Dirichlet set")
    return out


def solve_heat(mesh, phi, spec, smoothing=SmoothingParams(),
               assembler=None, tol=1e-8, x0=None):
    """Temperature field and thermal compliance <f, u> (lumped quadrature).

    Conductivity mixes the two phases by the raw element fraction; no ersatz
    floor is applied because the void conductivity is already positive.
    """
    assembler = assembler or ScalarAssembler(mesh)
    chi_e = element_chi(mesh, phi, smoothing)
    kappa = spec.alpha * chi_e + spec.beta * (1.0 - chi_e)
    a = assembler.stiffness(kappa)
    f = spec.source * assemble_lumped_mass(mesh)
    nodes = heat_dirichlet_nodes(mesh, spec)
    a2, f2 = apply_dirichlet(a, f, nodes, 0.0)
    u = solve(a2, f2, tol=tol, x0=x0)
    return u, float(f @ u)


def heat_sensitivity(mesh, phi, u, spec, smoothing=SmoothingParams()):
    """(alpha - beta) |grad u|^2 per node, times the delta weight."""
    g = element_gradients(mesh, u)
    dens = (spec.alpha - spec.beta) * np.einsum("ed,ed->e", g, g)
    return nodal_average(mesh, dens) * delta_factor(phi, smoothing)


# ---------------------------------------------------------------------------
# volume constraint and multiplier


def volume_constraint(mesh, phi, smoothing, g_max) -> float:
    """Lumped integral of the material fraction minus the allowed volume."""
    m = assemble_lumped_mass(mesh)
    return float(m @ smoothed_chi(phi, smoothing)) - g_max * mesh.domain_area


def multiplier_combine(raw, g_value, constraint: ConstraintState, mesh: TriMesh):
    """Normalize the raw sensitivity, update the multiplier, combine.

    The raw field is scaled to unit mean absolute value over the domain so
    reaction magnitudes are independent of the physical objective scale; the
    multiplier then grows by mu * G / |D| (clamped at zero) and subtracts
    uniformly from the normalized field.
    Returns (reaction, updated multiplier); the caller owns the state.
    """
    raw = np.asarray(raw, dtype=float)
    area = mesh.domain_area
    m = assemble_lumped_mass(mesh)
    denom = float(m @ np.abs(raw)) / area
    lam = max(0.0, constraint.lam + constraint.mu * g_value / area)
    if denom > 0.0:
        s = raw / denom
    else:
        s = np.zeros_like(raw)
        if lam > 0.0:
            logger.warning("zero sensitivity field with active constraint: pure shrink step")
    return s - lam, lam


# ---------------------------------------------------------------------------
# relaxed-density reference for heat conduction


def dual_energy_oracle(mesh, spec: HeatSpec, g_max, steps, k, tol=1e-8):
    """Relaxed-density optimum of the heat objective by projected descent.

    Element densities follow theta <- clamp01(theta - k |grad u|^2) under the
    arithmetic-mixture conductivity bound, with a uniform shift projecting
    back onto the volume budget whenever it is exceeded.  Only the
    alpha <= beta ordering is supported (descent sign convention).
    Returns the final objective value.
    """
    if spec.alpha > spec.beta:
        raise ConfigError("relaxed-density reference requires alpha <= beta")
    if not 0.0 < g_max <= 1.0:
        raise ConfigError(f"volume bound must lie in (0, 1], got {g_max}")
    assembler = ScalarAssembler(mesh)
    f = spec.source * assemble_lumped_mass(mesh)
    nodes = heat_dirichlet_nodes(mesh, spec)
    budget = g_max * mesh.domain_area
    theta = np.full(mesh.n_elements, min(g_max, 1.0))
    u = None
    prev_obj = np.inf
    worse = 0
    obj = np.nan
    for _ in range(steps):
        kappa = spec.alpha * theta + spec.beta * (1.0 - theta)
        a2, f2 = apply_dirichlet(assembler.stiffness(kappa), f, nodes, 0.0)
        u = solve(a2, f2, tol=tol, x0=u)
        obj = float(f @ u)
        if obj > prev_obj * (1.0 + 1e-12):
            worse += 1
            if worse >= 10:
                raise OracleError("relaxed-density descent diverged (objective rose 10 steps)")
        else:
            worse = 0
        prev_obj = obj
        g = element_gradients(mesh, u)
        theta = np.clip(theta - k * np.einsum("ed,ed->e", g, g), 0.0, 1.0)
        theta = _project_volume(theta, mesh.areas, budget)
    return obj


def _project_volume(theta, areas, budget):
    """Uniform downward shift (then clamp) until the volume budget holds."""
    if float(areas @ theta) <= budget:
        return theta
    lo, hi = 0.0, 1.0
    for _ in range(60):
        c = 0.5 * (lo + hi)
        if float(areas @ np.clip(theta - c, 0.0, 1.0)) > budget:
            lo = c
        else:
            hi = c
    return np.clip(theta - hi, 0.0, 1.0)


# ---------------------------------------------------------------------------
# per-iteration evaluation used by the optimizer


class ProblemWorkspace:
    """Caches assemblers, loads and warm-start states across iterations."""

    def __init__(self, mesh: TriMesh, problem: ProblemSpec,
                 smoothing: SmoothingParams, tol: float = 1e-8):
        self.mesh = mesh
        self.problem = problem
        self.smoothing = smoothing
        self.tol = tol
        self._u = None
        self._u_adj = None
        if problem.kind in ("compliance", "mechanism"):
            self.assembler = ElasticAssembler(mesh, problem.elasticity.poisson)
        else:
            self.assembler = ScalarAssembler(mesh)

    def evaluate(self, phi):
        """Objective and raw (unnormalized) growth reaction field at ``phi``."""
        p, s = self.problem, self.smoothing
        if p.kind == "compliance":
            u, obj = solve_compliance_state(self.mesh, phi, p.elasticity, s,
                                            assembler=self.assembler, tol=self.tol, x0=self._u)
            self._u = u
            raw = compliance_sensitivity(self.mesh, phi, u, p.elasticity, s,
                                         assembler=self.assembler)
        elif p.kind == "mechanism":
            u, u_adj, obj = solve_mechanism(self.mesh, phi, p.elasticity, s,
                                            assembler=self.assembler, tol=self.tol,
                                            x0=self._u, x0_adjoint=self._u_adj)
            self._u, self._u_adj = u, u_adj
            raw = -mechanism_sensitivity(self.mesh, phi, u, u_adj, p.elasticity, s,
                                         assembler=self.assembler)
        else:
            u, obj = solve_heat(self.mesh, phi, p.heat, s,
                                assembler=self.assembler, tol=self.tol, x0=self._u)
            self._u = u
            raw = heat_sensitivity(self.mesh, phi, u, p.heat, s)
        return obj, raw

    def objective(self, phi) -> float:
        """Objective only, without disturbing the warm-start cache."""
        p, s = self.problem, self.smoothing
        if p.kind == "compliance":
            return solve_compliance_state(self.mesh, phi, p.elasticity, s,
                                          assembler=self.assembler, tol=self.tol)[1]
        if p.kind == "mechanism":
            return solve_mechanism(self.mesh, phi, p.elasticity, s,
                                   assembler=self.assembler, tol=self.tol)[2]
        return solve_heat(self.mesh, phi, p.heat, s,
                          assembler=self.assembler, tol=self.tol)[1]
