"""Adaptive barrier methods for smooth non-convex problems with linear equality
constraints and a self-concordant barrier for the closed convex domain."""

from .ahba import AhbaConfig, ahba_step, run_ahba
from .barriers import (
    Barrier,
    LocalMetric,
    LogBall,
    LogBox,
    LogOrthant,
    Region,
    SumBarrier,
    dikin_step_feasible,
    dual_local_norm,
    local_norm,
    make_log_ball,
    make_log_box,
    make_log_orthant,
    omega,
    sum_barriers,
)
from .certification import (
    KktCertificate,
    SecondOrderCertificate,
    analytic_center,
    eps_kkt_certificate,
    monte_carlo_check,
    restart_loop,
    second_order_certificate,
)
from .cubic import CubicInstance, CubicSolution, solve_cubic
from .errors import AdaBarrierError, InputError, NumericalError
from .geometry import AffineConstraint, NullBasis, build_null_basis, project_reduced_data, solve_first_order_kkt
from .model import ObjectiveModel, Potential, fd_check_gradient, fd_check_hessian, potential_eval
from .problems import ProblemBundle, build_box_qp, build_lp_regression, build_poisson, make_problem
from .results import SolveOutput, Status, TraceRow
from .sahba import SahbaConfig, run_sahba, sahba_step

__version__ = "0.1.0"
