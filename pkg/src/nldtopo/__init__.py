"""Level-set topology optimization with nonlinear diffusion updates."""

from .errors import ConfigError, OracleError, SolverError
from .evolve import EvolveParams, EvolveState, EvolveWorkspace, step_dnld, step_nld, step_nnld
from .levelset import SmoothingParams, clip, delta_factor, smoothed_chi
from .mesh import BoundaryRegion, TriMesh, element_geometry, generate_rect
from .optimizer import (
    BENCHMARKS,
    Phase,
    RunResult,
    RunSetup,
    StopRule,
    benchmark,
    initial_lsf,
    override_params,
    run,
)
from .physics import (
    ConstraintState,
    ElasticitySpec,
    HeatSpec,
    ProblemSpec,
    compliance_sensitivity,
    dual_energy_oracle,
    heat_sensitivity,
    mechanism_sensitivity,
    multiplier_combine,
    solve_compliance_state,
    solve_heat,
    solve_mechanism,
    volume_constraint,
)

__version__ = "0.1.0"
