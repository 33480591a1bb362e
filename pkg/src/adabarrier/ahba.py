"""First-order adaptive barrier method.

Each outer iteration solves the barrier-regularized KKT system for a direction
``v`` in the null space of ``A``, then backtracks on a local Lipschitz estimate
until a quadratic upper bound measured in the local norm holds at the trial
point. The iterates stay interior because every step has local length at most
one half.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .barriers import LocalMetric
from .errors import (
    IllConditionedKKT,
    InfeasibleStart,
    InnerLoopExceeded,
    InvalidParameter,
    InvariantViolation,
    NonFiniteValue,
    NumericalError,
)
from .geometry import AffineConstraint, NullBasis, build_null_basis, metric_null_basis, recover_multiplier
from .model import Potential
from .results import SolveOutput, Status, TraceRow, dual_residual

__all__ = [
    "AhbaConfig",
    "AhbaState",
    "AhbaStepReport",
    "ahba_step",
    "run_ahba",
    "ahba_threshold",
    "ahba_step_size",
    "ahba_iteration_ceiling",
    "ahba_inner_budget",
]

log = logging.getLogger(__name__)

_ROUND = 16.0 * np.finfo(float).eps
DECREASE_SLACK = 1e-10


@dataclass(frozen=True)
class AhbaConfig:
    eps: float
    mu: float | None = None
    L0: float = 1.0
    max_outer: int = 200_000
    max_inner_per_step: int = 60
    L_floor: float = 1e-12

    def __post_init__(self):
        if not (self.eps > 0.0) or not math.isfinite(self.eps):
            raise InvalidParameter(f"eps must be positive, got {self.eps!r}")
        if self.mu is not None and not (self.mu > 0.0):
            raise InvalidParameter(f"mu override must be positive, got {self.mu!r}")
        if not (self.L0 >= 0.0) or not math.isfinite(self.L0):
            raise InvalidParameter(f"L0 must be non-negative, got {self.L0!r}")
        if self.max_outer < 0 or self.max_inner_per_step < 0:
            raise InvalidParameter("iteration limits must be non-negative")

    def resolved_mu(self, nu: float) -> float:
        return self.mu if self.mu is not None else self.eps / nu


@dataclass
class AhbaState:
    x: np.ndarray
    L: float
    k: int = 0
    inner_total: int = 0
    L_max: float = 0.0
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class AhbaStepReport:
    v: np.ndarray
    y: np.ndarray
    vnorm: float
    alpha: float
    estimate: float
    trials: int
    F_before: float
    F_after: float


def ahba_threshold(eps: float, nu: float) -> float:
    return eps / (3.0 * nu)


def ahba_step_size(estimate: float, mu: float, vnorm: float) -> float:
    """``min{1/(estimate + 2 mu), 1/(2 ||v||)}``."""
    a = 1.0 / (estimate + 2.0 * mu) if estimate + 2.0 * mu > 0.0 else math.inf
    b = 1.0 / (2.0 * vnorm) if vnorm > 0.0 else math.inf
    return min(a, b)


def ahba_iteration_ceiling(delta_f: float, eps: float, nu: float, M: float) -> int:
    """Worst-case outer iteration count with ``M`` standing for the smoothness constant."""
    return int(math.ceil(36.0 * (delta_f + eps) * nu**2 * (M + eps / nu) / eps**2))


def ahba_inner_budget(K: int, L_max: float, L0: float) -> float:
    """Allowed cumulative inner trials after ``K`` outer iterations."""
    extra = max(math.log2(L_max / L0), 0.0) if L0 > 0.0 and L_max > 0.0 else 0.0
    return 2.0 * (K + 1) + extra + 1.0


@dataclass
class _Point:
    x: np.ndarray
    f: float
    grad_f: np.ndarray
    h: float
    grad_h: np.ndarray
    H: np.ndarray

    def F(self, mu):
        return self.f + mu * self.h


def _evaluate(pot: Potential, x) -> _Point:
    barrier = pot.barrier
    if not barrier.is_interior(x):
        raise InvariantViolation("iterate left the barrier domain")
    h, gh, H = barrier.oracle(x)
    f = float(pot.objective.value(x))
    gf = np.asarray(pot.objective.gradient(x), dtype=float)
    if not (math.isfinite(f) and np.all(np.isfinite(gf))):
        raise NonFiniteValue("objective is not finite at an interior iterate")
    return _Point(x=x, f=f, grad_f=gf, h=h, grad_h=gh, H=H)


def _direction(pt: _Point, mu: float, c: AffineConstraint, Z: NullBasis):
    """Barrier KKT direction, multiplier and local norm of the direction."""
    g = pt.grad_f + mu * pt.grad_h
    W = metric_null_basis(Z, LocalMetric.from_hessian(pt.H).factor)
    w = W.T @ g
    v = -W @ w
    if not np.all(np.isfinite(v)):
        raise IllConditionedKKT("KKT direction is not finite")
    y = recover_multiplier(c, g + pt.H @ v)
    return v, y, float(np.linalg.norm(w))


def ahba_step(
    state: AhbaState,
    pot: Potential,
    c: AffineConstraint,
    Z: NullBasis | None = None,
    cfg: AhbaConfig | None = None,
    *,
    point: _Point | None = None,
    direction=None,
    threshold: float = math.nan,
    clock_start: float | None = None,
    epoch: int = 0,
):
    """Take one outer iteration and return ``(new_state, report)``.

    ``point`` and ``direction`` may be passed in when the caller has already
    evaluated them (the driver does so to test the stopping rule first).
    """
    if cfg is None:
        cfg = AhbaConfig(eps=1.0, mu=pot.mu if pot.mu > 0 else None, L0=state.L)
    if Z is None:
        Z = build_null_basis(c)
    if clock_start is None:
        clock_start = time.perf_counter()
    mu = pot.mu
    pt = point if point is not None else _evaluate(pot, state.x)
    v, y, vnorm = direction if direction is not None else _direction(pt, mu, c, Z)
    F_base = pt.F(mu)
    gfv = float(pt.grad_f @ v)
    objective, barrier = pot.objective, pot.barrier

    estimate = state.L
    last_nonfinite = False
    for i in range(cfg.max_inner_per_step + 1):
        alpha = ahba_step_size(estimate, mu, vnorm)
        if not math.isfinite(alpha):
            alpha = 0.0  # v == 0 and estimate + 2 mu == 0: nothing to move
        d = alpha * v
        z = state.x + d
        dn2 = alpha * alpha * vnorm * vnorm
        interior = barrier.is_interior(z)
        if interior:
            fz = float(objective.value(z))
            hz = barrier.value(z)
            Fz = fz + mu * hz
        else:
            fz = hz = Fz = math.inf
        finite = interior and math.isfinite(Fz)
        ok = False
        if finite:
            bound = pt.f + alpha * gfv + 0.5 * estimate * dn2
            slack = _ROUND * (abs(pt.f) + abs(fz) + abs(alpha * gfv) + 0.5 * estimate * dn2)
            ok = fz <= bound + slack
        row = TraceRow(
            k=state.k, inner=i, estimate=estimate, alpha=alpha, vnorm=vnorm,
            Fmu=Fz, f=fz, feas=c.residual(z), accepted=ok,
            ms=1e3 * (time.perf_counter() - clock_start),
            Fmu_base=F_base, threshold=threshold, interior=interior, taken=ok, epoch=epoch,
        )
        state.trace.append(row)
        state.inner_total += 1
        if ok:
            break
        if not finite:
            if last_nonfinite:
                raise NonFiniteValue(
                    f"two consecutive non-finite trial values at k={state.k} (estimate {estimate:.3e})"
                )
            last_nonfinite = True
        else:
            last_nonfinite = False
        estimate = 2.0 * estimate if estimate > 0.0 else cfg.L_floor
    else:
        raise InnerLoopExceeded(
            f"no acceptable step after {cfg.max_inner_per_step + 1} trials at k={state.k} "
            f"(last estimate {estimate:.3e}, |v|={vnorm:.3e})"
        )

    if alpha * vnorm > 0.5 + 1e-12:
        raise InvariantViolation(f"step left the half Dikin ellipsoid: {alpha * vnorm:.3e}")
    dF = Fz - F_base
    if dF > -0.5 * alpha * vnorm**2 + DECREASE_SLACK:
        raise InvariantViolation(
            f"potential decrease {dF:.3e} weaker than required {-0.5 * alpha * vnorm**2:.3e} at k={state.k}"
        )
    new_state = AhbaState(
        x=z, L=estimate / 2.0, k=state.k + 1, inner_total=state.inner_total,
        L_max=max(state.L_max, estimate), trace=state.trace,
    )
    report = AhbaStepReport(
        v=v, y=y, vnorm=vnorm, alpha=alpha, estimate=estimate, trials=i + 1,
        F_before=F_base, F_after=Fz,
    )
    return new_state, report


def _check_start(pot: Potential, c: AffineConstraint, x0) -> np.ndarray:
    x0 = np.array(x0, dtype=float)
    if x0.shape != (c.n,):
        raise InfeasibleStart(f"start point has shape {x0.shape}, expected ({c.n},)")
    if not pot.barrier.is_interior(x0):
        raise InfeasibleStart("start point is not strictly inside the barrier domain")
    if not c.is_feasible(x0):
        raise InfeasibleStart(f"start point violates A x = b (residual {c.residual(x0):.3e})")
    return x0


def run_ahba(
    pot: Potential,
    c: AffineConstraint,
    x0,
    cfg: AhbaConfig,
    Z: NullBasis | None = None,
    *,
    k_offset: int = 0,
    epoch: int = 0,
    trace: list | None = None,
    clock_start: float | None = None,
) -> SolveOutput:
    """Iterate until ``||v|| < eps / (3 nu)`` or ``cfg.max_outer`` outer steps.

    ``mu`` is taken from ``cfg`` (``eps / nu`` unless overridden). Numerical
    failures end the run with ``Status.FAILURE`` and keep the partial trace.
    """
    from .certification import eps_kkt_certificate

    nu = pot.barrier.nu
    mu = cfg.resolved_mu(nu)
    if pot.mu != mu:
        pot = replace(pot, mu=mu)
    x0 = _check_start(pot, c, x0)
    if Z is None:
        Z = build_null_basis(c)
    if clock_start is None:
        clock_start = time.perf_counter()
    thr = ahba_threshold(cfg.eps, nu)
    state = AhbaState(x=x0, L=cfg.L0, k=k_offset, trace=trace if trace is not None else [])
    inner_start = len(state.trace)

    status, reason = Status.MAX_ITERATIONS, ""
    pt = _evaluate(pot, x0)
    F0, f0 = pt.F(mu), pt.f
    v = y = None
    vnorm = math.nan
    try:
        for _ in range(cfg.max_outer + 1):
            v, y, vnorm = _direction(pt, mu, c, Z)
            if vnorm < thr:
                status = Status.CONVERGED
                break
            if state.k - k_offset >= cfg.max_outer:
                break
            state, _ = ahba_step(
                state, pot, c, Z, cfg, point=pt, direction=(v, y, vnorm),
                threshold=thr, clock_start=clock_start, epoch=epoch,
            )
            pt = _evaluate(pot, state.x)
    except NumericalError as exc:
        status, reason = Status.FAILURE, f"{type(exc).__name__}: {exc}"
        log.warning("AHBA stopped: %s", reason)
        if y is None:
            y = np.zeros(c.m)

    x = pt.x
    grad_f = pt.grad_f
    s = dual_residual(grad_f, c, y)
    cert = None
    try:
        cert = eps_kkt_certificate(x, y, mu, pot.barrier, grad_f, c)
    except NumericalError as exc:  # certificate is diagnostic; keep the run result
        log.warning("certificate unavailable: %s", exc)
    return SolveOutput(
        algorithm="ahba", x=x, y=y, s=s, L_final=state.L, status=status,
        iterations=state.k - k_offset, inner_trials=len(state.trace) - inner_start,
        trace=state.trace, reason=reason, eps=cfg.eps, mu=mu, nu=nu,
        vnorm_final=vnorm, threshold_final=thr, L_max=state.L_max, L_init=cfg.L0,
        F0=F0, f0=f0, f_final=pt.f, certificate=cert,
    )
