"""Numerical validation suites for barriers and problem bundles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barriers import Barrier, LocalMetric, omega
from .geometry import build_null_basis, solve_first_order_kkt
from .model import ObjectiveModel, fd_check_gradient, fd_check_hessian

__all__ = [
    "CheckResult",
    "self_concordance_ratio",
    "barrier_parameter_ratio",
    "scb_upper_bound_gap",
    "barrier_suite",
    "problem_suite",
]

SC_TOL = 1e-3
NU_TOL = 1e-6
UPPER_SLACK = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<34s} worst={self.worst:.3e}  tol={self.tol:.1e}"


def self_concordance_ratio(barrier: Barrier, x, u, rel_step: float = 1e-4) -> float:
    """``|D^3 h[u,u,u]| / (2 (D^2 h[u,u])^{3/2})`` with ``D^3`` from central differences."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    d2 = float(u @ barrier.hessian(x) @ u)
    if d2 <= 0.0:
        return math.inf
    h = rel_step / math.sqrt(d2)
    qp = float(u @ barrier.hessian(x + h * u) @ u)
    qm = float(u @ barrier.hessian(x - h * u) @ u)
    d3 = (qp - qm) / (2.0 * h)
    return abs(d3) / (2.0 * d2**1.5)


def barrier_parameter_ratio(barrier: Barrier, x) -> float:
    """``<grad h, H^{-1} grad h> / nu``."""
    metric = LocalMetric.at(barrier, x)
    return metric.dual_norm(barrier.gradient(x)) ** 2 / barrier.nu


def scb_upper_bound_gap(barrier: Barrier, x, d, t: float) -> float:
    """Right side minus left side of the self-concordant upper bound along ``x + t d``.

    ``h(x + t d) <= h(x) + t <grad h, d> + t^2 ||d||_x^2 omega(t ||d||_x)``.
    """
    metric = LocalMetric.at(barrier, x)
    nd = metric.norm(d)
    rhs = barrier.value(x) + t * float(barrier.gradient(x) @ d) + t * t * nd * nd * omega(t * nd)
    return rhs - barrier.value(np.asarray(x) + t * np.asarray(d))


def _barrier_model(barrier: Barrier) -> ObjectiveModel:
    return ObjectiveModel(barrier.dimension, barrier.value, barrier.gradient, barrier.hessian)


def barrier_suite(barrier: Barrier, samples: int = 100, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    pts = barrier.random_interior(rng, samples)
    n = barrier.dimension
    model = _barrier_model(barrier)
    sc = nu = fd_g = fd_h = 0.0
    upper = math.inf
    dikin_fail = 0
    for x in pts:
        metric = LocalMetric.at(barrier, x)
        u = rng.standard_normal(n)
        sc = max(sc, self_concordance_ratio(barrier, x, u))
        nu = max(nu, barrier_parameter_ratio(barrier, x))
        fd_g = max(fd_g, fd_check_gradient(model, x, 1e-5, barrier))
        fd_h = max(fd_h, fd_check_hessian(model, x, 1e-5, barrier))
        d = rng.standard_normal(n)
        t = 0.9 * rng.random() / metric.norm(d)
        upper = min(upper, scb_upper_bound_gap(barrier, x, d, t))
        v = rng.standard_normal(n)
        v *= 0.999 * rng.random() ** (1.0 / n) / metric.norm(v)
        dikin_fail += not barrier.is_interior(x + v)
    return [
        CheckResult("self-concordance ratio - 1", sc - 1.0, SC_TOL, sc <= 1.0 + SC_TOL),
        CheckResult("barrier parameter ratio - 1", nu - 1.0, NU_TOL, nu <= 1.0 + NU_TOL),
        CheckResult("barrier fd gradient", fd_g, 1e-5, fd_g <= 1e-5),
        CheckResult("barrier fd hessian", fd_h, 1e-5, fd_h <= 1e-5),
        CheckResult("upper bound deficit", max(-upper, 0.0), UPPER_SLACK, upper >= -UPPER_SLACK),
        CheckResult("dikin points outside", float(dikin_fail), 0.0, dikin_fail == 0),
    ]


def problem_suite(bundle, samples: int = 20, seed: int = 0) -> list[CheckResult]:
    """Derivative checks, start-point checks and a KKT residual for a problem bundle."""
    rng = np.random.default_rng(seed)
    obj, barrier, c = bundle.objective, bundle.barrier, bundle.constraint
    pts = bundle.sample_interior(rng, samples)
    fd_g = max(fd_check_gradient(obj, x, 1e-5, barrier) for x in pts)
    results = [CheckResult("objective fd gradient", fd_g, 1e-5, fd_g <= 1e-5)]
    if obj.has_hessian:
        fd_h = max(fd_check_hessian(obj, x, 1e-4, barrier) for x in pts)
        results.append(CheckResult("objective fd hessian", fd_h, 1e-4, fd_h <= 1e-4))
    x0 = bundle.x_start
    inside = barrier.is_interior(x0)
    results.append(CheckResult("start point outside domain", float(not inside), 0.0, inside))
    res = c.residual(x0)
    results.append(CheckResult("start point A x - b", res, 1e-12, res <= 1e-12))
    if inside:
        Z = build_null_basis(c)
        _, g, H = barrier.oracle(x0)
        g = g + np.asarray(obj.gradient(x0))
        v, y = solve_first_order_kkt(H, c, g, Z)
        stat = g + H @ v - (c.A.T @ y if c.m else 0.0)
        scale = 1.0 + float(np.linalg.norm(g))
        kkt = max(float(np.linalg.norm(stat)) / scale, float(np.linalg.norm(c.A @ v)) if c.m else 0.0)
        results.append(CheckResult("KKT residual at start", kkt, 1e-8, kkt <= 1e-8))
    results.extend(barrier_suite(barrier, samples=samples, seed=seed))
    return results
