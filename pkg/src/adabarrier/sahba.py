"""Second-order adaptive barrier method.

Directions minimize a cubic-regularized model of the potential over the null
space of ``A``, with the cubic weight measured in the local norm. The weight is
found by backtracking on two tests: a cubic upper bound on ``f`` and a bound on
the gradient remainder in the dual local norm.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .ahba import DECREASE_SLACK, _check_start, _evaluate
from .barriers import LocalMetric
from .cubic import CubicInstance, solve_cubic
from .errors import (
    InnerLoopExceeded,
    InvalidParameter,
    InvariantViolation,
    NonFiniteValue,
    NumericalError,
)
from .geometry import (
    AffineConstraint,
    NullBasis,
    build_null_basis,
    metric_null_basis,
    project_reduced_data,
    recover_multiplier,
)
from .model import Potential
from .results import SolveOutput, Status, TraceRow, dual_residual

__all__ = [
    "SahbaConfig",
    "SahbaState",
    "SahbaStepReport",
    "sahba_step",
    "run_sahba",
    "sahba_threshold",
    "sahba_step_size",
    "sahba_iteration_ceiling",
    "sahba_inner_budget",
]

log = logging.getLogger(__name__)

_ROUND = 16.0 * np.finfo(float).eps
FLOOR_FACTOR = 144.0
PSD_TOL = 1e-8


@dataclass(frozen=True)
class SahbaConfig:
    """Settings for the second-order method.

    ``M0`` defaults to ``max(1, 144 eps)``; an explicit value below ``144 eps``
    is raised to that floor with a warning.
    """

    eps: float
    mu: float | None = None
    M0: float | None = None
    max_outer: int = 10_000
    max_inner_per_step: int = 60

    def __post_init__(self):
        if not (self.eps > 0.0) or not math.isfinite(self.eps):
            raise InvalidParameter(f"eps must be positive, got {self.eps!r}")
        if self.mu is not None and not (self.mu > 0.0):
            raise InvalidParameter(f"mu override must be positive, got {self.mu!r}")
        if self.M0 is None:
            object.__setattr__(self, "M0", max(1.0, self.L_floor))
        if not math.isfinite(self.M0) or self.M0 <= 0.0:
            raise InvalidParameter(f"M0 must be positive, got {self.M0!r}")
        if self.max_outer < 0 or self.max_inner_per_step < 0:
            raise InvalidParameter("iteration limits must be non-negative")
        if self.M0 < self.L_floor:
            warnings.warn(
                f"M0={self.M0:.3e} is below 144*eps={self.L_floor:.3e}; using the floor",
                RuntimeWarning,
                stacklevel=3,
            )
            object.__setattr__(self, "M0", self.L_floor)

    @property
    def L_floor(self) -> float:
        return FLOOR_FACTOR * self.eps

    def resolved_mu(self, nu: float) -> float:
        return self.mu if self.mu is not None else self.eps / (4.0 * nu)


@dataclass
class SahbaState:
    x: np.ndarray
    M: float
    k: int = 0
    inner_total: int = 0
    L_max: float = 0.0
    prev: tuple | None = None  # (vnorm, L, Delta, y) of the last completed direction
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class SahbaStepReport:
    v: np.ndarray
    y: np.ndarray
    vnorm: float
    alpha: float
    L: float
    Delta: float
    trials: int
    F_before: float
    F_after: float
    step_min_eig: float
    taken: bool


def sahba_threshold(eps: float, L: float, nu: float) -> float:
    """``sqrt(eps / (12 L nu))``."""
    return math.sqrt(eps / (12.0 * L * nu))


def sahba_step_size(vnorm: float) -> float:
    return 1.0 if vnorm <= 0.5 else 1.0 / (2.0 * vnorm)


def sahba_iteration_ceiling(delta_f: float, eps: float, nu: float, M: float) -> int:
    return int(math.ceil(576.0 * nu**1.5 * math.sqrt(6.0 * M) * (delta_f + eps) / eps**1.5))


def sahba_inner_budget(K: int, L_max: float, M0: float) -> float:
    return 2.0 * (K + 1) + 2.0 * max(math.log2(2.0 * L_max / M0), 1.0) + 1.0


def _stop_test(prev, vnorm, Delta) -> bool:
    return prev is not None and prev[0] < prev[2] and vnorm < Delta


def sahba_step(
    state: SahbaState,
    pot: Potential,
    c: AffineConstraint,
    Z: NullBasis | None = None,
    cfg: SahbaConfig | None = None,
    *,
    point=None,
    clock_start: float | None = None,
    epoch: int = 0,
    allow_stop: bool = True,
):
    """Run the inner loop at ``state.x`` and, unless the stopping rule fires, step.

    Returns ``(new_state, report)``. When ``report.taken`` is false the point is
    unchanged and the driver should stop.
    """
    if cfg is None:
        cfg = SahbaConfig(eps=1.0, mu=pot.mu, M0=state.M)
    if Z is None:
        Z = build_null_basis(c)
    if clock_start is None:
        clock_start = time.perf_counter()
    objective, barrier, mu = pot.objective, pot.barrier, pot.mu
    if objective.hessian is None:
        raise InvalidParameter("the second-order method needs an objective Hessian")
    nu = barrier.nu
    pt = point if point is not None else _evaluate(pot, state.x)
    x = pt.x
    hess_f = np.asarray(objective.hessian(x), dtype=float)
    metric = LocalMetric.from_hessian(pt.H, anchor=x)
    gF = pt.grad_f + mu * pt.grad_h
    # Reduced coordinates in a basis of ker A that is orthonormal for H(x).
    W = NullBasis(metric_null_basis(Z, metric.factor), c)
    g_r, J_r, H_r = project_reduced_data(W, gF, hess_f, pt.H)
    F_base = pt.F(mu)
    Zm = W.Z

    first_row = len(state.trace)
    last_nonfinite = False
    L = state.M
    for i in range(cfg.max_inner_per_step + 1):
        L = (2.0**i) * state.M
        sol = solve_cubic(CubicInstance(g_r, J_r, H_r, L))
        v = Zm @ sol.u
        vnorm = metric.norm(v)
        alpha = sahba_step_size(vnorm)
        d = alpha * v
        z = x + d
        dn = alpha * vnorm
        interior = barrier.is_interior(z)
        ok = False
        fz = Fz = math.inf
        if interior:
            fz = float(objective.value(z))
            Fz = fz + mu * barrier.value(z)
        finite = interior and math.isfinite(Fz)
        if finite:
            gz = np.asarray(objective.gradient(z), dtype=float)
            finite = bool(np.all(np.isfinite(gz)))
        if finite:
            gfd = float(pt.grad_f @ d)
            Bd = hess_f @ d
            quad = 0.5 * float(d @ Bd)
            cub = L / 6.0 * dn**3
            slack1 = _ROUND * (abs(pt.f) + abs(fz) + abs(gfd) + abs(quad) + cub)
            ls1 = fz <= pt.f + gfd + quad + cub + slack1
            rem = gz - pt.grad_f - Bd
            slack2 = _ROUND * (metric.dual_norm(gz) + metric.dual_norm(pt.grad_f) + metric.dual_norm(Bd))
            ls2 = metric.dual_norm(rem) <= 0.5 * L * dn**2 + slack2
            ok = ls1 and ls2
        state.trace.append(
            TraceRow(
                k=state.k, inner=i, estimate=L, alpha=alpha, vnorm=vnorm,
                Fmu=Fz, f=fz, feas=c.residual(z), accepted=ok,
                ms=1e3 * (time.perf_counter() - clock_start),
                Fmu_base=F_base, interior=interior, epoch=epoch,
            )
        )
        state.inner_total += 1
        if ok:
            break
        if not finite:
            if last_nonfinite:
                raise NonFiniteValue(f"two consecutive non-finite trial values at k={state.k} (L {L:.3e})")
            last_nonfinite = True
        else:
            last_nonfinite = False
    else:
        raise InnerLoopExceeded(
            f"no acceptable cubic step after {cfg.max_inner_per_step + 1} trials at k={state.k} (last L {L:.3e})"
        )

    Delta = sahba_threshold(cfg.eps, L, nu)
    for row in state.trace[first_row:]:
        row.threshold = Delta
    # Optimality of the cubic step, re-checked on the projected matrices.
    P = J_r + 0.5 * L * vnorm * H_r
    step_eig = float(np.linalg.eigvalsh(P)[0]) if P.size else math.inf
    if P.size and step_eig < -PSD_TOL * max(1.0, float(np.linalg.norm(P, 2))):
        raise InvariantViolation(f"cubic step is not a global model minimizer: lambda_min {step_eig:.3e}")
    y = recover_multiplier(c, gF + hess_f @ v + 0.5 * L * vnorm * (pt.H @ v))
    L_max = max(state.L_max, L)

    if allow_stop and _stop_test(state.prev, vnorm, Delta):
        new_state = SahbaState(
            x=x, M=state.M, k=state.k, inner_total=state.inner_total, L_max=L_max,
            prev=(vnorm, L, Delta, y), trace=state.trace,
        )
        report = SahbaStepReport(
            v=v, y=y, vnorm=vnorm, alpha=alpha, L=L, Delta=Delta, trials=i + 1,
            F_before=F_base, F_after=F_base, step_min_eig=step_eig, taken=False,
        )
        return new_state, report

    if dn > 0.5 + 1e-12:
        raise InvariantViolation(f"step left the half Dikin ellipsoid: {dn:.3e}")
    dF = Fz - F_base
    if vnorm >= Delta and dF > -(vnorm**3) * L * alpha**2 / 24.0 + DECREASE_SLACK:
        raise InvariantViolation(
            f"potential decrease {dF:.3e} weaker than required {-(vnorm**3) * L * alpha**2 / 24.0:.3e} at k={state.k}"
        )
    state.trace[-1].taken = True
    new_state = SahbaState(
        x=z, M=max(0.5 * L, cfg.L_floor), k=state.k + 1, inner_total=state.inner_total,
        L_max=L_max, prev=(vnorm, L, Delta, y), trace=state.trace,
    )
    report = SahbaStepReport(
        v=v, y=y, vnorm=vnorm, alpha=alpha, L=L, Delta=Delta, trials=i + 1,
        F_before=F_base, F_after=Fz, step_min_eig=step_eig, taken=True,
    )
    return new_state, report


def run_sahba(
    pot: Potential,
    c: AffineConstraint,
    x0,
    cfg: SahbaConfig,
    Z: NullBasis | None = None,
    *,
    k_offset: int = 0,
    epoch: int = 0,
    trace: list | None = None,
    clock_start: float | None = None,
) -> SolveOutput:
    """Iterate until two consecutive directions are shorter than their thresholds.

    On convergence the output point is the current iterate (no step is taken)
    and the multiplier is the one from the previous direction.
    """
    from .certification import eps_kkt_certificate, second_order_certificate

    nu = pot.barrier.nu
    mu = cfg.resolved_mu(nu)
    if pot.mu != mu:
        pot = replace(pot, mu=mu)
    if pot.objective.hessian is None:
        raise InvalidParameter("the second-order method needs an objective Hessian")
    x0 = _check_start(pot, c, x0)
    if Z is None:
        Z = build_null_basis(c)
    if clock_start is None:
        clock_start = time.perf_counter()
    state = SahbaState(x=x0, M=cfg.M0, k=k_offset, trace=trace if trace is not None else [])
    inner_start = len(state.trace)

    status, reason = Status.MAX_ITERATIONS, ""
    pt = _evaluate(pot, x0)
    F0, f0 = pt.F(mu), pt.f
    y = np.zeros(c.m)
    vnorm = Delta = L_last = math.nan
    try:
        while state.k - k_offset < cfg.max_outer:
            state, rep = sahba_step(state, pot, c, Z, cfg, point=pt, clock_start=clock_start, epoch=epoch)
            vnorm, Delta, L_last = rep.vnorm, rep.Delta, rep.L
            if not rep.taken:
                status = Status.CONVERGED
                break
            y = rep.y
            pt = _evaluate(pot, state.x)
    except NumericalError as exc:
        status, reason = Status.FAILURE, f"{type(exc).__name__}: {exc}"
        log.warning("SAHBA stopped: %s", reason)

    x = pt.x
    s = dual_residual(pt.grad_f, c, y)
    cert = second = None
    eps2 = math.nan
    try:
        cert = eps_kkt_certificate(x, y, mu, pot.barrier, pt.grad_f, c)
        if math.isfinite(L_last):
            eps2 = L_last * cfg.eps / (24.0 * nu)
            second = second_order_certificate(x, Z, pot.objective.hessian(x), pot.barrier, eps2)
    except NumericalError as exc:
        log.warning("certificate unavailable: %s", exc)
    return SolveOutput(
        algorithm="sahba", x=x, y=y, s=s, L_final=state.M, status=status,
        iterations=state.k - k_offset, inner_trials=len(state.trace) - inner_start,
        trace=state.trace, reason=reason, eps=cfg.eps, mu=mu, nu=nu,
        vnorm_final=vnorm, threshold_final=Delta, L_max=state.L_max, L_init=cfg.M0,
        L_last=L_last, F0=F0, f0=f0, f_final=pt.f, certificate=cert, second_order=second, eps2=eps2,
    )
