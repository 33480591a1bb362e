"""Linear equality constraints ``A x = b``, null-space bases and KKT solves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .barriers import LocalMetric
from .errors import DimensionMismatch, IllConditionedKKT, IllConditionedMetric, RankDeficient

__all__ = [
    "AffineConstraint",
    "NullBasis",
    "build_null_basis",
    "solve_first_order_kkt",
    "project_reduced_data",
    "recover_multiplier",
    "metric_null_basis",
]


@dataclass(frozen=True)
class AffineConstraint:
    """The affine set ``{x : A x = b}``; ``A`` may have zero rows."""

    A: np.ndarray
    b: np.ndarray
    rank_tol: float | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.ndim != 2:
            raise DimensionMismatch("A must be a matrix")
        if b.shape != (A.shape[0],):
            raise DimensionMismatch(f"b must have shape ({A.shape[0]},), got {b.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.rank_tol is None:
            scale = np.abs(A).max() if A.size else 1.0
            object.__setattr__(self, "rank_tol", 1e-10 * max(A.shape) * scale)

    @classmethod
    def unconstrained(cls, n: int) -> "AffineConstraint":
        return cls(np.zeros((0, n)), np.zeros(0))

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def residual(self, x) -> float:
        if self.m == 0:
            return 0.0
        return float(np.linalg.norm(self.A @ x - self.b))

    def is_feasible(self, x, rtol: float = 1e-8) -> bool:
        return self.residual(x) <= rtol * (1.0 + np.linalg.norm(self.b))


@dataclass(frozen=True)
class NullBasis:
    """Orthonormal basis ``Z`` (n x p) of ``ker A``."""

    Z: np.ndarray
    constraint: AffineConstraint = field(repr=False)

    @property
    def p(self) -> int:
        return self.Z.shape[1]


def build_null_basis(c: AffineConstraint) -> NullBasis:
    """Null-space basis from a column-pivoted QR factorization of ``A^T``."""
    m, n = c.A.shape
    if m == 0:
        return NullBasis(np.eye(n), c)
    if m > n:
        raise RankDeficient(f"{m} equality constraints on {n} variables cannot have full row rank")
    Q, R, _ = scipy.linalg.qr(c.A.T, mode="full", pivoting=True)
    rank = int(np.sum(np.abs(np.diag(R)) > c.rank_tol))
    if rank < m:
        raise RankDeficient(f"A has numerical rank {rank} < {m} rows")
    Z = np.ascontiguousarray(Q[:, m:])
    return NullBasis(Z, c)


def recover_multiplier(c: AffineConstraint, rhs) -> np.ndarray:
    """Least-squares solution of ``A^T y = rhs``."""
    if c.m == 0:
        return np.zeros(0)
    y, *_ = np.linalg.lstsq(c.A.T, rhs, rcond=None)
    return y


def metric_null_basis(Z: NullBasis, factor) -> np.ndarray:
    """Basis ``W`` of ``ker A`` with ``W^T H W = I`` where ``H = C C^T``.

    ``W = C^{-T} Q`` with ``Q`` the orthonormal factor of ``C^T Z``. Working with
    ``W`` avoids forming ``Z^T H Z``, whose small eigenvalues are lost when a
    few entries of ``H`` dominate.
    """
    Zm = Z.Z
    if Zm.shape[1] == 0:
        return np.zeros((Zm.shape[0], 0))
    Q, _ = np.linalg.qr(factor.T @ Zm)
    W = scipy.linalg.solve_triangular(factor.T, Q, lower=False, check_finite=False)
    if not np.all(np.isfinite(W)):
        raise IllConditionedKKT("metric-orthonormal null basis is not finite")
    return W


def solve_first_order_kkt(H, c: AffineConstraint, g, Z: NullBasis | None = None, factor=None):
    """Solve ``g + H v - A^T y = 0``, ``A v = 0`` for ``(v, y)``.

    The direction is ``v = -W W^T g`` with ``W`` an ``H``-orthonormal basis of
    ``ker A``; the multiplier comes from least squares on ``A^T y = g + H v``.
    ``factor`` may supply a lower Cholesky factor of ``H``.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = c.n
    if H.shape != (n, n) or g.shape != (n,):
        raise DimensionMismatch("H must be n x n and g of length n")
    if Z is None:
        Z = build_null_basis(c)
    if factor is None:
        try:
            factor = LocalMetric.from_hessian(H).factor
        except IllConditionedMetric as exc:
            raise IllConditionedKKT("KKT metric is not positive definite") from exc
    W = metric_null_basis(Z, factor)
    v = -W @ (W.T @ g)
    if not np.all(np.isfinite(v)):
        raise IllConditionedKKT("reduced KKT solve produced non-finite values")
    y = recover_multiplier(c, g + H @ v)
    return v, y


def project_reduced_data(Z: NullBasis, grad, hess_f, H):
    """Return ``(Z^T grad, Z^T hess_f Z, Z^T H Z)``."""
    Zm = Z.Z
    n = Zm.shape[0]
    grad = np.asarray(grad, dtype=float)
    hess_f = np.asarray(hess_f, dtype=float)
    H = np.asarray(H, dtype=float)
    if grad.shape != (n,) or hess_f.shape != (n, n) or H.shape != (n, n):
        raise DimensionMismatch("reduced-data inputs do not match the null basis dimension")
    g_r = Zm.T @ grad
    J_r = Zm.T @ hess_f @ Zm
    H_r = Zm.T @ H @ Zm
    return g_r, 0.5 * (J_r + J_r.T), 0.5 * (H_r + H_r.T)
