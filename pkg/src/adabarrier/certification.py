"""Starting points, optimality certificates and the restart wrapper."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .barriers import Barrier, LocalMetric
from .errors import DimensionMismatch, InfeasibleStart, InvalidParameter, NoConvergence, OutsideDomain
from .geometry import AffineConstraint, NullBasis, build_null_basis, solve_first_order_kkt
from .results import SolveOutput, Status, dual_residual

__all__ = [
    "KktCertificate",
    "SecondOrderCertificate",
    "MonteCarloCheck",
    "analytic_center",
    "newton_decrement",
    "eps_kkt_bound",
    "eps_kkt_certificate",
    "second_order_certificate",
    "monte_carlo_check",
    "restart_schedule",
    "restart_loop",
]

log = logging.getLogger(__name__)

CENTER_DECREMENT = 0.5


@dataclass(frozen=True)
class KktCertificate:
    """``xi`` measures how far ``-(grad f - A^T y)/mu`` is from ``grad h`` in the dual norm.

    ``eps_bound`` is ``None`` when ``xi >= 1`` (no certificate).
    """

    xi: float
    eps_bound: Optional[float]
    feasibility_residual: float
    mu: float
    nu: float

    @property
    def available(self) -> bool:
        return self.eps_bound is not None


@dataclass(frozen=True)
class SecondOrderCertificate:
    eps2: float
    min_eig: float
    passed: bool
    tol_psd: float = 1e-8


@dataclass(frozen=True)
class MonteCarloCheck:
    samples: int
    worst: float
    bound: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def newton_decrement(barrier: Barrier, c: AffineConstraint, x, Z: NullBasis | None = None):
    """Return ``(lambda, v)`` for the Newton step of ``h`` restricted to ``A x = b``."""
    _, g, H = barrier.oracle(x)
    v, _ = solve_first_order_kkt(H, c, g, Z)
    return math.sqrt(max(float(v @ H @ v), 0.0)), v


def analytic_center(
    barrier: Barrier,
    c: AffineConstraint,
    x_start,
    *,
    max_iters: int = 100,
    polish_tol: float = 1e-10,
    Z: NullBasis | None = None,
) -> np.ndarray:
    """Minimize ``h`` over the affine slice by Newton's method.

    Damped steps ``1/(1 + lambda)`` are taken while the decrement ``lambda``
    exceeds 1/2. Full steps then polish the point until ``lambda <= polish_tol``
    (they stay interior because ``lambda < 1``). The returned point always has
    ``lambda <= 1/2``. Raises :class:`NoConvergence` when the budget runs out,
    which is what happens when ``h`` has no minimizer on the slice.
    """
    x = np.array(x_start, dtype=float)
    if x.shape != (c.n,):
        raise InfeasibleStart(f"start point has shape {x.shape}, expected ({c.n},)")
    if not barrier.is_interior(x):
        raise InfeasibleStart("start point is not strictly inside the barrier domain")
    if not c.is_feasible(x):
        raise InfeasibleStart(f"start point violates A x = b (residual {c.residual(x):.3e})")
    if Z is None:
        Z = build_null_basis(c)
    lam = math.inf
    centered = None
    for _ in range(max_iters + 1):
        lam, v = newton_decrement(barrier, c, x, Z)
        if lam <= CENTER_DECREMENT and centered is None:
            centered = x
        if lam <= polish_tol:
            return x
        step = 1.0 if lam <= CENTER_DECREMENT else 1.0 / (1.0 + lam)
        x_new = x + step * v
        if not barrier.is_interior(x_new):
            break
        x = x_new
    if centered is not None:
        # Polishing stalled in rounding; the centered point is still valid.
        lam_now, _ = newton_decrement(barrier, c, x, Z)
        return x if lam_now <= CENTER_DECREMENT else centered
    raise NoConvergence(
        f"analytic center not reached in {max_iters} Newton steps (decrement {lam:.3e}); "
        "the barrier may have no minimizer on this slice"
    )


def eps_kkt_bound(xi: float, mu: float, nu: float) -> Optional[float]:
    """``mu (nu + (sqrt(nu) + xi) xi / (1 - xi))`` for ``xi < 1``; ``None`` otherwise."""
    if not (xi < 1.0):
        return None
    return mu * (nu + (math.sqrt(nu) + xi) * xi / (1.0 - xi))


def eps_kkt_certificate(x, y, mu: float, barrier: Barrier, f_grad, c: AffineConstraint | None = None) -> KktCertificate:
    x = np.asarray(x, dtype=float)
    if not barrier.is_interior(x):
        raise OutsideDomain("certificates are only defined at interior points")
    if not (mu > 0.0):
        raise InvalidParameter("mu must be positive for the first-order certificate")
    if c is None:
        c = AffineConstraint.unconstrained(x.size)
    s = dual_residual(f_grad, c, np.asarray(y, dtype=float))
    metric = LocalMetric.at(barrier, x)
    xi = metric.dual_norm(-s / mu - barrier.gradient(x))
    return KktCertificate(
        xi=xi, eps_bound=eps_kkt_bound(xi, mu, barrier.nu),
        feasibility_residual=c.residual(x), mu=mu, nu=barrier.nu,
    )


def second_order_certificate(x, Z, f_hess, barrier: Barrier, eps2: float, tol_psd: float = 1e-8) -> SecondOrderCertificate:
    """Smallest eigenvalue of ``Z^T (hess f + sqrt(eps2) H) Z``."""
    x = np.asarray(x, dtype=float)
    Zm = Z.Z if isinstance(Z, NullBasis) else np.asarray(Z, dtype=float)
    if Zm.ndim != 2 or Zm.shape[0] != x.size:
        raise DimensionMismatch(f"null basis has shape {Zm.shape}, expected ({x.size}, p)")
    if eps2 < 0.0:
        raise InvalidParameter("eps2 must be non-negative")
    B = np.asarray(f_hess(x) if callable(f_hess) else f_hess, dtype=float)
    if B.shape != (x.size, x.size):
        raise DimensionMismatch("objective Hessian does not match x")
    if Zm.shape[1] == 0:
        return SecondOrderCertificate(eps2=eps2, min_eig=math.inf, passed=True, tol_psd=tol_psd)
    P = Zm.T @ (B + math.sqrt(eps2) * barrier.hessian(x)) @ Zm
    lam = float(np.linalg.eigvalsh(0.5 * (P + P.T))[0])
    return SecondOrderCertificate(eps2=eps2, min_eig=lam, passed=lam >= -tol_psd, tol_psd=tol_psd)


def _slice_points(rng, barrier, c, Z, x, count, radius):
    """Points of the closed domain on the affine slice, half of them on its boundary."""
    Zm = Z.Z
    out = []
    if Zm.shape[1] == 0:
        return out
    for j in range(count):
        d = Zm @ rng.standard_normal(Zm.shape[1])
        d /= np.linalg.norm(d)
        lo, hi = 0.0, radius
        if not barrier.is_interior(x + hi * d):
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if barrier.is_interior(x + mid * d):
                    lo = mid
                else:
                    hi = mid
            hi = lo
        t = hi if j % 2 == 0 else hi * rng.random()
        out.append(x + t * d)
    return out


def monte_carlo_check(
    x,
    s,
    eps_bound: float,
    barrier: Barrier,
    c: AffineConstraint | None = None,
    *,
    samples: int = 1000,
    seed: int = 0,
    scale: float = 10.0,
) -> MonteCarloCheck:
    """Spot-check ``<s, z - x> >= -eps_bound`` on sampled ``z`` from the closed domain.

    Half the samples come from the whole closed domain; the other half lie on
    the affine slice through ``x``, with every other one pushed to the boundary.
    Statistical evidence only.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    rng = np.random.default_rng(seed)
    if c is None:
        c = AffineConstraint.unconstrained(x.size)
    n_slice = samples // 2
    pts = list(barrier.sample_closure(rng, samples - n_slice, scale))
    pts += _slice_points(rng, barrier, c, build_null_basis(c), x, n_slice, scale)
    vals = np.array([float(s @ (z - x)) for z in pts]) if pts else np.zeros(0)
    worst = float(vals.min()) if vals.size else math.inf
    return MonteCarloCheck(
        samples=len(pts), worst=worst, bound=eps_bound, violations=int(np.sum(vals < -eps_bound)),
    )


def restart_schedule(eps0: float, eps_target: float) -> list[float]:
    """``eps0, eps0/2, ...`` down to the first value not above ``eps_target``."""
    if not (eps0 > 0.0 and eps_target > 0.0):
        raise InvalidParameter("tolerances must be positive")
    if eps_target > eps0:
        raise InvalidParameter("eps_target must not exceed eps0")
    out = [eps0]
    while out[-1] > eps_target * (1.0 + 1e-12):
        out.append(out[-1] / 2.0)
    return out


def restart_loop(
    algorithm: str,
    pot_factory: Callable[[float], object],
    c: AffineConstraint,
    x_start,
    eps0: float,
    eps_target: float,
    *,
    base_config=None,
    Z: NullBasis | None = None,
) -> SolveOutput:
    """Run the chosen method over a halving sequence of tolerances with warm starts.

    The point and the smoothness estimate carry over between epochs; iteration
    counters and the trace accumulate. ``pot_factory(mu)`` builds the potential.
    """
    from .ahba import AhbaConfig, run_ahba
    from .sahba import SahbaConfig, run_sahba

    if algorithm not in ("ahba", "sahba"):
        raise InvalidParameter(f"unknown algorithm {algorithm!r}")
    schedule = restart_schedule(eps0, eps_target)
    if Z is None:
        Z = build_null_basis(c)
    nu = pot_factory(1.0).barrier.nu
    x = np.asarray(x_start, dtype=float)
    trace: list = []
    k_total = inner_total = 0
    estimate = None
    L_max = 0.0
    F0 = f0 = math.nan
    out = None
    for epoch, eps in enumerate(schedule):
        if algorithm == "ahba":
            cfg = base_config if base_config is not None else AhbaConfig(eps=eps)
            cfg = replace(cfg, eps=eps, L0=cfg.L0 if estimate is None else estimate)
            pot = pot_factory(cfg.resolved_mu(nu))
            out = run_ahba(pot, c, x, cfg, Z, k_offset=k_total, epoch=epoch, trace=trace)
        else:
            cfg = base_config if base_config is not None else SahbaConfig(eps=eps)
            M0 = cfg.M0 if estimate is None else max(estimate, 144.0 * eps)
            cfg = replace(cfg, eps=eps, M0=max(M0, 144.0 * eps))
            pot = pot_factory(cfg.resolved_mu(nu))
            out = run_sahba(pot, c, x, cfg, Z, k_offset=k_total, epoch=epoch, trace=trace)
        if epoch == 0:
            F0, f0 = out.F0, out.f0
        k_total += out.iterations
        inner_total += out.inner_trials
        L_max = max(L_max, out.L_max)
        x, estimate = out.x, out.L_final
        log.info("epoch %d eps=%.3e status=%s iterations=%d", epoch, eps, out.status.value, out.iterations)
        if out.status is not Status.CONVERGED:
            break
    out.iterations = k_total
    out.inner_trials = inner_total
    out.trace = trace
    out.L_max = L_max
    out.F0, out.f0 = F0, f0
    out.epochs = epoch + 1
    out.algorithm = f"{algorithm}_restart"
    return out
