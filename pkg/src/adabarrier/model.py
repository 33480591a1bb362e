"""Objective interface, the barrier potential ``F = f + mu h`` and derivative checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .barriers import Barrier, LocalMetric
from .errors import InvalidParameter, OutsideDomain

__all__ = [
    "ObjectiveModel",
    "Potential",
    "potential_eval",
    "fd_check_gradient",
    "fd_check_hessian",
    "first_order_smoothness_probe",
    "second_order_smoothness_probe",
]


@dataclass(frozen=True)
class ObjectiveModel:
    """Objective ``f`` with exact derivatives on the interior of its domain.

    ``hessian`` is optional; without it only the first-order method applies.
    """

    dimension: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smooth_on_boundary: bool = True

    @property
    def has_hessian(self) -> bool:
        return self.hessian is not None


@dataclass(frozen=True)
class Potential:
    objective: ObjectiveModel
    barrier: Barrier
    mu: float

    def __post_init__(self):
        if not (self.mu >= 0.0):
            raise InvalidParameter(f"mu must be non-negative, got {self.mu!r}")

    def value(self, x) -> float:
        """``F(x)``; ``+inf`` outside the barrier domain or where ``f`` is not finite."""
        if not self.barrier.is_interior(x):
            return np.inf
        fx = float(self.objective.value(x))
        return fx + self.mu * self.barrier.value(x)

    def evaluate(self, x):
        return potential_eval(self, x)


def potential_eval(p: Potential, x):
    """Return ``(F(x), grad F(x))`` at an interior point."""
    x = np.asarray(x, dtype=float)
    if not p.barrier.is_interior(x):
        raise OutsideDomain("potential evaluated outside the barrier domain")
    hx = p.barrier.value(x)
    gh = p.barrier.gradient(x)
    fx = float(p.objective.value(x))
    gf = np.asarray(p.objective.gradient(x), dtype=float)
    if p.mu == 0.0:
        return fx, gf
    return fx + p.mu * hx, gf + p.mu * gh


def _fd_steps(x, step, barrier, evaluate):
    """Per-coordinate steps for which every ``x +- h_i e_i`` stays evaluable.

    With a barrier the step in coordinate ``i`` is also capped by
    ``step / sqrt(H_ii)``, so the stencil scales with the distance to the
    boundary. Shrinks once by 1e-3 if the stencil still fails.
    """
    h = np.full(x.size, step * (1.0 + np.max(np.abs(x))))
    if barrier is not None and barrier.is_interior(x):
        h = np.minimum(h, step / np.sqrt(np.diag(barrier.hessian(x))))
    for _ in range(2):
        ok = True
        for i in range(x.size):
            for sgn in (1.0, -1.0):
                xp = x.copy()
                xp[i] += sgn * h[i]
                if barrier is not None and not barrier.is_interior(xp):
                    ok = False
                    break
                if not np.all(np.isfinite(evaluate(xp))):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return h
        h = h * 1e-3
    raise OutsideDomain("finite-difference stencil leaves the domain even after shrinking the step")


def _relative_error(approx, exact):
    scale = max(1.0, float(np.max(np.abs(exact))) if np.size(exact) else 1.0)
    return float(np.max(np.abs(approx - exact)) / scale) if np.size(exact) else 0.0


def fd_check_gradient(m: ObjectiveModel, x, step: float = 1e-5, barrier: Barrier | None = None) -> float:
    """Worst central-difference gradient mismatch, scaled by ``max(1, |grad|_inf)``."""
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise InvalidParameter("finite-difference step must be positive")
    h = _fd_steps(x, step, barrier, lambda z: np.atleast_1d(m.value(z)))
    fd = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        fd[i] = (m.value(x + e) - m.value(x - e)) / (2.0 * h[i])
    return _relative_error(fd, np.asarray(m.gradient(x), dtype=float))


def fd_check_hessian(m: ObjectiveModel, x, step: float = 1e-4, barrier: Barrier | None = None) -> float:
    """Worst central-difference Hessian mismatch (differences of gradients)."""
    if m.hessian is None:
        raise InvalidParameter("objective has no Hessian to check")
    x = np.asarray(x, dtype=float)
    if step <= 0:
        raise InvalidParameter("finite-difference step must be positive")
    h = _fd_steps(x, step, barrier, m.gradient)
    n = x.size
    fd = np.empty((n, n))
    for i in range(n):
        e = np.zeros_like(x)
        e[i] = h[i]
        fd[:, i] = (np.asarray(m.gradient(x + e)) - np.asarray(m.gradient(x - e))) / (2.0 * h[i])
    fd = 0.5 * (fd + fd.T)
    return _relative_error(fd, np.asarray(m.hessian(x), dtype=float))


def _probe_directions(rng, metric: LocalMetric, Z, count):
    """Random tangent directions with local norm uniform in (0, 0.99)."""
    p = Z.shape[1]
    for _ in range(count):
        if p == 0:
            return
        v = Z @ rng.standard_normal(p)
        nv = metric.norm(v)
        if nv == 0.0:
            continue
        yield v * (0.99 * rng.random() / nv)


def first_order_smoothness_probe(m: ObjectiveModel, barrier: Barrier, Z, points, samples: int = 20, seed: int = 0) -> float:
    """Largest observed ``2 (f(x+v) - f(x) - <grad f, v>) / ||v||_x^2`` over tangent ``v``."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for x in points:
        metric = LocalMetric.at(barrier, x)
        fx, gx = m.value(x), m.gradient(x)
        for v in _probe_directions(rng, metric, Z, samples):
            rem = m.value(x + v) - fx - gx @ v
            best = max(best, 2.0 * rem / metric.norm(v) ** 2)
    return best


def second_order_smoothness_probe(m: ObjectiveModel, barrier: Barrier, Z, points, samples: int = 20, seed: int = 0) -> float:
    """Largest observed ``2 ||grad f(x+v) - grad f(x) - hess f(x) v||*_x / ||v||_x^2``."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for x in points:
        metric = LocalMetric.at(barrier, x)
        gx, Hx = m.gradient(x), m.hessian(x)
        for v in _probe_directions(rng, metric, Z, samples):
            rem = m.gradient(x + v) - gx - Hx @ v
            best = max(best, 2.0 * metric.dual_norm(rem) / metric.norm(v) ** 2)
    return best
