"""Alternating first-order solvers for nonconvex-strongly-concave min-max problems.

``min_x max_y Phi(x, y) - h(y)`` is solved by GD-RGA (explicit x-step),
PD-RGA (proximal x-step) and PPGA (simultaneous updates). Every trace can
be checked against the inequalities of the convergence analysis.
"""
from .diagnostics import (
    CertificateReport,
    CheckResult,
    certify,
    check_delta_recursion,
    check_descent_inequality_gdrga,
    check_descent_inequality_pdrga,
    check_ystar_gap_pdrga,
    stationarity_report,
    theorem_constants,
)
from .errors import *  # noqa: F401,F403
from .imaging import ImagingProblem, build_imaging_minmax, psnr
from .linops import LinearOperator, make_blur_operator, make_downsampling_operator, power_iteration_norm
from .oracle import InnerOracle, OracleResult, grad_phi_fd, solve_inner
from .problem import ConcavitySource, MinMaxProblem, SmoothnessConstants, effective_constants, validate_problem
from .problems import bilinear_quadratic_problem, quadratic_problem, toy_problem
from .prox import ProxFriendlyFunction, ProxKind, ProxSpec, prox_apply, toy_prox_piecewise
from .solvers import Scheme, SolverState, StepSizeConfig, gd_rga_step, pd_rga_step, ppga_step, run_solver
from .stepsize import (
    bounds_gdrga,
    bounds_pdrga,
    gamma_gdrga,
    gamma_pdrga,
    step_size_bounds,
    table_blockwise,
    table_jointly_lipschitz,
    theta_star,
)
from .trace import IterateTrace, TraceRecord

__version__ = "0.1.0"
