"""Built-in test problems with exact derivatives and strictly feasible starts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .barriers import Barrier, make_log_box, make_log_orthant
from .errors import InvalidData, InvalidDimension, InvalidParameter, InputError
from .geometry import AffineConstraint, build_null_basis
from .model import ObjectiveModel

__all__ = [
    "ProblemBundle",
    "build_poisson",
    "random_poisson",
    "build_box_qp",
    "box_qp_from_data",
    "build_lp_regression",
    "PROBLEMS",
    "make_problem",
]


@dataclass(frozen=True)
class ProblemBundle:
    """Everything a solver needs: objective, barrier, constraint and a start point.

    ``center_start`` says whether the analytic center exists (bounded slice);
    otherwise ``x_start`` is used as is.
    """

    name: str
    objective: ObjectiveModel
    barrier: Barrier
    constraint: AffineConstraint
    x_start: np.ndarray
    center_start: bool = True
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.constraint.n

    def sample_interior(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Interior points (not necessarily on the affine slice) for derivative checks."""
        return self.barrier.random_interior(rng, count)


def _power_terms(u, alpha, p):
    up = u**p
    return alpha * up.sum(), alpha * p * up / u, alpha * p * (p - 1.0) * up / u**2


def build_poisson(Phi, z, alpha: float, p: float, seed: int = 0) -> ProblemBundle:
    """Penalized Poisson likelihood over ``x = (u, v)`` with ``v = Phi u`` and ``u, v > 0``.

    ``f(u, v) = sum(v - z log v) + alpha sum(u**p)``.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    m, n_u = Phi.shape
    if z.shape != (m,):
        raise InvalidDimension(f"z must have length {m}, got {z.shape}")
    if np.any(Phi < 0) or not np.all(np.isfinite(Phi)):
        raise InvalidData("Phi must have finite non-negative entries")
    if np.any(Phi.sum(axis=0) <= 0):
        raise InvalidData("every column of Phi must have a positive sum")
    if np.any(z < 0) or not np.all(np.isfinite(z)):
        raise InvalidData("z must be finite and non-negative")
    if not (alpha > 0):
        raise InvalidParameter("alpha must be positive")
    if not (0.0 < p < 1.0):
        raise InvalidParameter("p must lie in (0, 1)")
    n = n_u + m

    def value(x):
        u, v = x[:n_u], x[n_u:]
        return float(np.sum(v - z * np.log(v)) + alpha * np.sum(u**p))

    def gradient(x):
        u, v = x[:n_u], x[n_u:]
        return np.concatenate([_power_terms(u, alpha, p)[1], 1.0 - z / v])

    def hessian(x):
        u, v = x[:n_u], x[n_u:]
        return np.diag(np.concatenate([_power_terms(u, alpha, p)[2], z / v**2]))

    A = np.hstack([Phi, -np.eye(m)])
    u0 = np.ones(n_u)
    x0 = np.concatenate([u0, Phi @ u0])
    return ProblemBundle(
        name="poisson",
        objective=ObjectiveModel(n, value, gradient, hessian, smooth_on_boundary=False),
        barrier=make_log_orthant(n),
        constraint=AffineConstraint(A, np.zeros(m)),
        x_start=x0,
        center_start=False,
        params={"n_u": n_u, "m": m, "alpha": alpha, "p": p, "seed": seed},
    )


def random_poisson(n: int = 10, m: int | None = None, alpha: float = 0.1, p: float = 0.5, seed: int = 0) -> ProblemBundle:
    """Poisson instance with ``n`` unknowns and ``m`` counts drawn from a sparse ground truth."""
    if n < 1:
        raise InvalidDimension("n must be at least 1")
    m = max(1, n // 2) if m is None else m
    if m < 1:
        raise InvalidDimension("m must be at least 1")
    rng = np.random.default_rng(seed)
    Phi = rng.uniform(0.0, 1.0, size=(m, n)) + 0.05
    u_true = np.where(rng.random(n) < 0.3, rng.uniform(1.0, 5.0, n), 0.0)
    z = rng.poisson(Phi @ u_true + 0.5).astype(float)
    return build_poisson(Phi, z, alpha, p, seed)


def box_qp_from_data(Q, c_lin, lower, upper, A=None, b=None, x_start=None, name: str = "box_qp", params=None) -> ProblemBundle:
    """``f(x) = x^T Q x / 2 + c^T x`` on an open box, optionally with ``A x = b``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = Q.shape[0]
    if Q.shape != (n, n):
        raise InvalidDimension("Q must be square")
    Q = 0.5 * (Q + Q.T)
    c_lin = np.atleast_1d(np.asarray(c_lin, dtype=float))
    if c_lin.shape != (n,):
        raise InvalidDimension(f"c must have length {n}")
    barrier = make_log_box(lower, upper)
    if barrier.lower.size != n:
        raise InvalidDimension("box bounds do not match Q")
    c = AffineConstraint.unconstrained(n) if A is None else AffineConstraint(A, b)
    if x_start is None:
        mid = 0.5 * (barrier.lower + barrier.upper)
        if c.m:
            # Move the midpoint onto the slice along the row space of A.
            Z = build_null_basis(c).Z
            x_part, *_ = np.linalg.lstsq(c.A, c.b, rcond=None)
            x_start = x_part + Z @ (Z.T @ (mid - x_part))
        else:
            x_start = mid
    x_start = np.asarray(x_start, dtype=float)
    if not barrier.is_interior(x_start):
        raise InvalidData("the box and the constraint have no common interior point near the midpoint")

    def value(x):
        return float(0.5 * x @ Q @ x + c_lin @ x)

    def gradient(x):
        return Q @ x + c_lin

    def hessian(x):
        return Q.copy()

    return ProblemBundle(
        name=name,
        objective=ObjectiveModel(n, value, gradient, hessian),
        barrier=barrier,
        constraint=c,
        x_start=x_start,
        center_start=True,
        params=dict(params or {}),
    )


def build_box_qp(
    n: int = 20,
    seed: int = 7,
    negative_curvature_fraction: float = 0.5,
    *,
    sum_constraint: bool = True,
    lower: float = 0.0,
    upper: float = 1.0,
    sum_level: float = 0.4,
) -> ProblemBundle:
    """Random QP on ``[lower, upper]^n`` with a prescribed share of negative eigenvalues.

    Eigenvalue magnitudes are uniform in ``[1, 10]``. With ``sum_constraint`` the
    slice is ``sum(x) = sum_level * n * (upper - lower) + n * lower``.
    """
    if n < 1:
        raise InvalidDimension("n must be at least 1")
    if not (0.0 <= negative_curvature_fraction <= 1.0):
        raise InvalidParameter("negative_curvature_fraction must lie in [0, 1]")
    if sum_constraint and n < 2:
        raise InvalidDimension("a sum constraint needs n >= 2")
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    mags = rng.uniform(1.0, 10.0, n)
    n_neg = int(round(negative_curvature_fraction * n))
    signs = np.ones(n)
    signs[:n_neg] = -1.0
    Q = (V * (signs * mags)) @ V.T
    Q = 0.5 * (Q + Q.T)
    c_lin = rng.standard_normal(n)
    A = b = None
    if sum_constraint:
        A = np.ones((1, n))
        b = np.array([n * lower + sum_level * n * (upper - lower)])
    return box_qp_from_data(
        Q, c_lin, np.full(n, lower), np.full(n, upper), A, b,
        params={"n": n, "seed": seed, "negative_curvature_fraction": negative_curvature_fraction},
    )


def build_lp_regression(n: int = 10, lam: float = 0.1, p: float = 0.5, seed: int = 0, *, hidden: int = 8, outputs: int = 5) -> ProblemBundle:
    """``||B tanh(W x + c) - z||^2 + lam sum(x**p)`` on the positive orthant."""
    if n < 1 or hidden < 1 or outputs < 1:
        raise InvalidDimension("dimensions must be positive")
    if not (0.0 < p < 1.0):
        raise InvalidParameter("p must lie in (0, 1)")
    if not (lam > 0):
        raise InvalidParameter("lam must be positive")
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((hidden, n)) / np.sqrt(n)
    c0 = 0.1 * rng.standard_normal(hidden)
    B = rng.standard_normal((outputs, hidden)) / np.sqrt(hidden)
    z = B @ np.tanh(W @ np.abs(rng.standard_normal(n)) + c0) + 0.1 * rng.standard_normal(outputs)

    def parts(x):
        t = np.tanh(W @ x + c0)
        return t, B @ t - z

    def value(x):
        _, r = parts(x)
        return float(r @ r + lam * np.sum(x**p))

    def gradient(x):
        t, r = parts(x)
        dt = 1.0 - t**2
        return 2.0 * W.T @ (dt * (B.T @ r)) + _power_terms(x, lam, p)[1]

    def hessian(x):
        t, r = parts(x)
        dt = 1.0 - t**2
        ddt = -2.0 * t * dt
        BD = B * dt
        inner = BD.T @ BD + np.diag(ddt * (B.T @ r))
        return 2.0 * W.T @ inner @ W + np.diag(_power_terms(x, lam, p)[2])

    return ProblemBundle(
        name="lp_regression",
        objective=ObjectiveModel(n, value, gradient, hessian, smooth_on_boundary=False),
        barrier=make_log_orthant(n),
        constraint=AffineConstraint.unconstrained(n),
        x_start=np.ones(n),
        center_start=False,
        params={"n": n, "lam": lam, "p": p, "seed": seed},
    )


PROBLEMS: dict[str, Callable[..., ProblemBundle]] = {
    "poisson": random_poisson,
    "box_qp": build_box_qp,
    "lp_regression": build_lp_regression,
}


def make_problem(name: Optional[str], **params) -> ProblemBundle:
    """Build a registered problem; unknown names raise :class:`InputError`."""
    if not name or name not in PROBLEMS:
        raise InputError(f"unknown problem {name!r}; choose one of {', '.join(sorted(PROBLEMS))}")
    try:
        return PROBLEMS[name](**params)
    except TypeError as exc:
        raise InvalidParameter(f"bad parameters for problem {name!r}: {exc}") from exc
