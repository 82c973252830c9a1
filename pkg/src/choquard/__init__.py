"""Ground states of Choquard equations ``-Lap u + V u = (I_alpha * F(u)) f(u)``
by descent on the Pohozaev manifold, with spectral discretization on a box."""

__version__ = "0.1.0"

from .functionals import (
    EnergyBreakdown, FiberMap, Problem, autonomous_identity_residual, energy_breakdown, fiber_eval, g_elem,
    h_elem, key_inequality_gap, l2_gradient, lambda_membership,
)
from .grid import (
    Field, GridSpec, dilate, dump_field, gaussian, gradient_sq_norm, laplacian, load_field, make_grid,
    quadrature,
)
from .models import (
    NonlinSpec, PotentialSpec, check_assumptions, diagnostic_constants, eval_nonlinearity, eval_potential,
    make_nonlinearity, make_potential,
)
from .riesz import RieszPlan, plan_riesz, riesz_constant, riesz_convolve, riesz_convolve_direct
from .solver import (
    SolveConfig, SolveResult, fiber_maximize, mountain_pass_upper_bound, project_to_manifold,
    solve_autonomous, solve_ground_state,
)
from .experiments import (
    concentration_metrics, radial_oracle_pekar, sweep_epsilon, sweep_lambda, verify_battery,
)

__all__ = [
    "EnergyBreakdown", "FiberMap", "Field", "GridSpec", "NonlinSpec", "PotentialSpec", "Problem",
    "RieszPlan", "SolveConfig", "SolveResult", "autonomous_identity_residual", "check_assumptions",
    "concentration_metrics", "diagnostic_constants", "dilate", "dump_field", "energy_breakdown",
    "eval_nonlinearity", "eval_potential", "fiber_eval", "fiber_maximize", "g_elem", "gaussian",
    "gradient_sq_norm", "h_elem", "key_inequality_gap", "l2_gradient", "lambda_membership", "laplacian",
    "load_field", "make_grid", "make_nonlinearity", "make_potential", "mountain_pass_upper_bound",
    "plan_riesz", "project_to_manifold", "quadrature", "radial_oracle_pekar", "riesz_constant",
    "riesz_convolve", "riesz_convolve_direct", "solve_autonomous", "solve_ground_state", "sweep_epsilon",
    "sweep_lambda", "verify_battery",
]
