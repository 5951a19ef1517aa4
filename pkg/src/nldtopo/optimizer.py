"""Optimization driver: state solve, multiplier update, evolution step, clip.

A run iterates until the sup-norm of the level-set update falls below the
stop threshold (after a warmup), the step budget is exhausted, or a solver
fails; partial history is preserved in all cases.  Mid-run parameter
switches (scheme, q, dt, ...) are expressed as a phase schedule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, SolverError
from .evolve import (
    EvolveParams,
    EvolveState,
    EvolveWorkspace,
    initial_diffusivity,
    step_dnld,
    step_nld,
    step_nnld,
)
from .levelset import SmoothingParams, clip
from .mesh import BoundaryRegion, TriMesh, generate_rect
from .physics import (
    ConstraintState,
    ElasticitySpec,
    HeatSpec,
    ProblemSpec,
    ProblemWorkspace,
    multiplier_combine,
    volume_constraint,
)

BENCHMARKS = ("cantilever", "mbb", "bridge", "mechanism", "heat_low_alpha", "heat_high_alpha")
INIT_KINDS = ("full", "perforated", "upper_half")
STOP_REASONS = ("converged", "max_steps", "solver_failure")


@dataclass(frozen=True)
class Phase:
    """Evolution parameters active for steps below ``until_step``."""

    params: EvolveParams
    until_step: float = math.inf


def validate_phases(phases):
    phases = tuple(phases)
    if not phases:
        raise ConfigError("at least one phase is required")
    bounds = [p.until_step for p in phases]
    if any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise ConfigError("phase bounds must be strictly increasing")
    if not math.isinf(phases[-1].until_step):
        raise ConfigError("the last phase must be unbounded")
    return phases


def params_at(phases, step: int) -> EvolveParams:
    for ph in phases:
        if step < ph.until_step:
            return ph.params
    return phases[-1].params


@dataclass
class StopRule:
    """Convergence threshold on the sup-norm of the level-set update.

    The rule fires once the update norm has stayed below ``k_eps`` for
    ``patience`` consecutive iterations (the stop condition asks for updates
    to remain small from some step onward, so an isolated dip amid interface
    flips must not count).  ``norm_region`` is "domain", ("abs", c) for the
    band |phi| <= c, or ("range", lo, hi) for the band lo <= phi < hi,
    evaluated at the current iterate.  Never fires before ``warmup``
    completed iterations.
    """

    k_eps: float = 1e-2
    warmup: int = 10
    max_steps: int = 1000
    norm_region: object = "domain"
    patience: int = 5

    def __post_init__(self):
        if self.k_eps <= 0:
            raise ConfigError(f"k_eps must be positive, got {self.k_eps}")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be nonnegative")
        if self.warmup < 0:
            raise ConfigError("warmup must be nonnegative")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")


def update_norm(phi_ref, diff, region) -> float:
    """Sup-norm of ``diff`` restricted to the region defined by ``phi_ref``."""
    diff = np.abs(np.asarray(diff, dtype=float))
    if region == "domain":
        return float(diff.max())
    kind = region[0]
    if kind == "abs":
        mask = np.abs(phi_ref) <= region[1]
    elif kind == "range":
        mask = (phi_ref >= region[1]) & (phi_ref < region[2])
    else:
        raise ConfigError(f"unknown norm region {region!r}")
    return float(diff[mask].max()) if np.any(mask) else 0.0


@dataclass
class HistoryRow:
    step: int
    objective: float
    constraint: float
    lam: float
    linf_update: float
    wall_ms: float


@dataclass
class RunResult:
    phi: np.ndarray
    history: list
    reason: str

    @property
    def steps(self) -> int:
        return len(self.history)


class NullSink:
    """Default sink: discard rows and snapshots."""

    def row(self, row: HistoryRow):
        pass

    def snapshot(self, step: int, phi: np.ndarray, final: bool = False):
        pass

    def close(self):
        pass


def run(mesh: TriMesh, problem: ProblemSpec, phi0, phases, stop: StopRule,
        *, smoothing: SmoothingParams = SmoothingParams(),
        fixed_material_tags=(), sink=None, solver_tol: float = 1e-8) -> RunResult:
    """Drive the optimization loop; returns the final field and history.

    Every iteration: state solve and objective, volume constraint, reaction
    assembly with multiplier update, one evolution step, clip back to
    [-1, 1].  Each history row is handed to the sink before the next state
    solve so a crash preserves everything computed so far.
    """
    phases = validate_phases(phases)
    sink = sink or NullSink()
    phi = clip(phi0)
    constraint = ConstraintState(problem.g_max, 0.0, problem.mu)
    pw = ProblemWorkspace(mesh, problem, smoothing, tol=solver_tol)
    ew = EvolveWorkspace(mesh, fixed_material_tags)
    state = EvolveState()
    history: list[HistoryRow] = []
    reason = "max_steps"
    quiet_run = 0
    n = 0
    while n < stop.max_steps:
        t0 = time.perf_counter()
        params = params_at(phases, n)
        try:
            obj, raw = pw.evaluate(phi)
            g = volume_constraint(mesh, phi, smoothing, problem.g_max)
            # The inertial scheme adds a volume-response lag that turns the
            # multiplier recurrence into a sustained (volume, lambda) ring;
            # updating lambda against the momentum-extrapolated field restores
            # the phase margin.  Plain schemes use the current field.
            g_mult = g
            if params.scheme == "nnld" and params.h and state.phi_prev is not None:
                probe = clip((1.0 + params.h) * phi - params.h * state.phi_prev)
                g_mult = volume_constraint(mesh, probe, smoothing, problem.g_max)
            reaction, constraint.lam = multiplier_combine(raw, g_mult, constraint, mesh)
            if params.scheme == "nld":
                nxt = step_nld(ew, phi, reaction, params, tol=solver_tol)
            elif params.scheme == "nnld":
                if state.phi_prev is None:
                    nxt = step_nld(ew, phi, reaction, params, tol=solver_tol)
                else:
                    nxt = step_nnld(ew, phi, state.phi_prev, reaction, params, n,
                                    tol=solver_tol)
            else:
                if state.v_prev is None:
                    state.v_prev = initial_diffusivity(ew, phi, params)
                nxt, state.v_prev = step_dnld(ew, phi, reaction, params, state.v_prev,
                                              tol=solver_tol)
        except SolverError:
            reason = "solver_failure"
            break
        nxt = clip(nxt)
        dn = update_norm(phi, nxt - phi, stop.norm_region)
        wall = (time.perf_counter() - t0) * 1e3
        row = HistoryRow(n, obj, g, constraint.lam, dn, wall)
        history.append(row)
        sink.row(row)
        sink.snapshot(n, phi)
        state.phi_prev = phi
        state.step_index = n + 1
        phi = nxt
        n += 1
        quiet_run = quiet_run + 1 if dn < stop.k_eps else 0
        if n >= stop.warmup and quiet_run >= stop.patience:
            reason = "converged"
            break
    sink.snapshot(n, phi, final=True)
    return RunResult(phi, history, reason)


# ---------------------------------------------------------------------------
# initial level-set fields


def initial_lsf(kind: str, mesh: TriMesh, pitch: float | None = None,
                radius: float | None = None) -> np.ndarray:
    """Benchmark initializations: full domain, hole lattice, or upper half."""
    if kind not in INIT_KINDS:
        raise ConfigError(f"unknown initial field {kind!r}, expected one of {INIT_KINDS}")
    if kind == "full":
        return np.ones(mesh.n_nodes)
    if kind == "upper_half":
        return np.where(mesh.nodes[:, 1] >= mesh.domain_height / 2.0, 1.0, -1.0)
    w, h = mesh.domain_width, mesh.domain_height
    pitch = pitch if pitch is not None else min(w, h) / 3.0
    radius = radius if radius is not None else 0.3 * pitch
    cx = np.arange(pitch / 2.0, w, pitch)
    cy = np.arange(pitch / 2.0, h, pitch)
    centers = np.array([(x, y) for y in cy for x in cx])
    d = np.linalg.norm(mesh.nodes[:, None, :] - centers[None, :, :], axis=2).min(axis=1)
    return np.where(d < radius, -1.0, 1.0)


# ---------------------------------------------------------------------------
# benchmark definitions


@dataclass
class RunSetup:
    """Fully populated inputs for one benchmark run."""

    name: str
    mesh: TriMesh
    problem: ProblemSpec
    phases: tuple
    stop: StopRule
    init_kind: str
    smoothing: SmoothingParams = SmoothingParams()
    fixed_material_tags: tuple = ()

    def initial(self) -> np.ndarray:
        return initial_lsf(self.init_kind, self.mesh)

    def execute(self, sink=None, solver_tol: float = 1e-8) -> RunResult:
        return run(self.mesh, self.problem, self.initial(), self.phases, self.stop,
                   smoothing=self.smoothing, fixed_material_tags=self.fixed_material_tags,
                   sink=sink, solver_tol=solver_tol)


def override_params(setup: RunSetup, **kw) -> RunSetup:
    """Replace evolution parameters uniformly across all phases."""
    phases = tuple(Phase(replace(ph.params, **kw), ph.until_step) for ph in setup.phases)
    return replace(setup, phases=phases)


# spring stiffness scale on the mechanism input/output ports, relative to E
MECHANISM_SPRING_SCALE = 0.5


def benchmark(name: str, nx: int | None = None, ny: int | None = None) -> RunSetup:
    """Named benchmark setups with their published parameter tuples.

    Domain aspect ratios and patch widths are configuration estimates (the
    source figures are qualitative); all physical constants and the
    (tau, G_max, dt) tuples are exact.
    """
    if name not in BENCHMARKS:
        raise ConfigError(f"unknown benchmark {name!r}, expected one of {BENCHMARKS}")
    if name == "cantilever":
        nx, ny = nx or 40, ny or 20
        mesh = generate_rect(nx, ny, 2.0, 1.0, [
            BoundaryRegion("clamp", "left", 0.0, 1.0),
            BoundaryRegion("load", "right", 0.45, 0.55),
        ])
        problem = ProblemSpec(
            kind="compliance",
            elasticity=ElasticitySpec(dirichlet=(("clamp", (0, 1)),), traction_tag="load"),
            g_max=0.45,
        )
        params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=3.0e-4, dt=0.7)
        return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "full",
                        fixed_material_tags=("clamp", "load"))
    if name == "mbb":
        nx, ny = nx or 40, ny or 20
        mesh = generate_rect(nx, ny, 2.0, 1.0, [
            BoundaryRegion("load", "top", 0.95, 1.05),
            BoundaryRegion("pin", "bottom", 0.0, 0.05),
            BoundaryRegion("roller", "bottom", 1.95, 2.0),
        ])
        problem = ProblemSpec(
            kind="compliance",
            elasticity=ElasticitySpec(dirichlet=(("pin", (0, 1)), ("roller", (1,))),
                                      traction_tag="load"),
            g_max=0.4,
        )
        params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=6.0e-5, dt=0.3)
        return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "full",
                        fixed_material_tags=("load", "pin", "roller"))
    if name == "bridge":
        nx, ny = nx or 40, ny or 20
        mesh = generate_rect(nx, ny, 2.0, 1.0, [
            BoundaryRegion("deck", "bottom", 0.95, 1.05),
            BoundaryRegion("pin", "bottom", 0.0, 0.05),
            BoundaryRegion("roller", "bottom", 1.95, 2.0),
        ])
        problem = ProblemSpec(
            kind="compliance",
            elasticity=ElasticitySpec(dirichlet=(("pin", (0, 1)), ("roller", (1,))),
                                      traction_tag="deck"),
            g_max=0.35,
        )
        params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=1.0e-4, dt=0.5)
        return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "perforated",
                        fixed_material_tags=("deck", "pin", "roller"))
    if name == "mechanism":
        nx, ny = nx or 32, ny or 32
        mesh = generate_rect(nx, ny, 1.0, 1.0, [
            BoundaryRegion("input", "left", 0.45, 0.55),
            BoundaryRegion("output", "right", 0.45, 0.55),
            BoundaryRegion("support", "left", 0.0, 0.1),
            BoundaryRegion("support2", "left", 0.9, 1.0),
        ])
        young = 2.1e11
        spring = -MECHANISM_SPRING_SCALE * young * np.eye(2)
        problem = ProblemSpec(
            kind="mechanism",
            elasticity=ElasticitySpec(
                young=young,
                traction=(1.0, 0.0),
                traction_tag="input",
                dirichlet=(("support", (0, 1)), ("support2", (0, 1))),
                spring_in=("input", spring),
                spring_out=("output", spring),
                out_traction=("output", (0.0, -1.0)),
            ),
            g_max=0.4,
        )
        params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=1.5e-4, dt=0.2)
        return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "full",
                        fixed_material_tags=("support", "support2", "input", "output"))
    if name == "heat_low_alpha":
        nx, ny = nx or 48, ny or 48
        mesh = generate_rect(nx, ny, 1.0, 1.0, [])
        problem = ProblemSpec(
            kind="heat",
            heat=HeatSpec(alpha=1.0e-2, beta=1.0, source=1.0, dirichlet=("free",)),
            g_max=0.5,
        )
        params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=1.0e-5, dt=0.5)
        return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "full")
    # heat_high_alpha
    nx, ny = nx or 48, ny or 48
    mesh = generate_rect(nx, ny, 1.0, 1.0, [
        BoundaryRegion("sink", "bottom", 0.4, 0.6),
    ])
    problem = ProblemSpec(
        kind="heat",
        heat=HeatSpec(alpha=1.0, beta=1.0e-2, source=1.0, dirichlet=("sink",)),
        g_max=0.4,
    )
    params = EvolveParams(scheme="nld", q=1.0, q_tilde=1.0, tau=1.0e-4, dt=0.4)
    return RunSetup(name, mesh, problem, (Phase(params),), StopRule(), "full",
                    fixed_material_tags=("sink",))
