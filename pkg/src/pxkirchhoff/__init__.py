"""Sixth-order variable-exponent Kirchhoff problems on grids: energy, geometry and two-solution solvers."""

from .config import ExperimentSpec, build_problem, parse_config, serialize_config
from .energy import (
    EnergyBreakdown,
    KirchhoffCoefficients,
    ProblemData,
    directional_derivative_check,
    energy_J,
    kirchhoff_cap,
    kirchhoff_M,
    potential_phi,
    residual,
    residual_norm,
)
from .exponents import ExponentField, build_exponent_field, check_H1, critical_exponent, derived_exponents
from .geometry import (
    GeometryConstants,
    check_H2,
    find_divergence_ray,
    mountain_pass_constants,
    verify_small_t_negative,
    verify_sphere_lower_bound,
)
from .mesh import Grid, GridFunction, build_grid, grad_laplacian, integrate, laplacian, x_norm
from .report import run_experiment
from .solvers import (
    SolutionPair,
    SolverParams,
    ekeland_ball_descent,
    mountain_pass_solve,
    ps_monitor,
    solve_pair,
)
from .varx import (
    embedding_constants,
    estimate_embedding_constant,
    holder_bound,
    luxemburg_norm,
    modular,
    verify_norm_modular_relations,
)
from .verification import verify_suite

__version__ = "0.1.0"
