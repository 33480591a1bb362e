"""Global minimization of the cubic-regularized model

    m(u) = <g, u> + 1/2 <J u, u> + L/6 ||u||_H^3

over all of ``R^p``, with ``J`` symmetric (possibly indefinite) and ``H`` positive
definite. The global minimizer is characterized by

    (J + sigma H) u = -g,   sigma = L ||u||_H / 2,   J + sigma H >= 0,

so after whitening with the Cholesky factor of ``H`` and diagonalizing ``J`` the
problem reduces to a scalar secular equation in ``sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, FactorizationFailure, InvalidParameter, NoConvergence

__all__ = ["CubicInstance", "CubicSolution", "solve_cubic", "model_value"]


@dataclass(frozen=True)
class CubicInstance:
    g: np.ndarray
    J: np.ndarray
    H: np.ndarray
    L: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        p = g.size
        J = np.asarray(self.J, dtype=float).reshape(p, p)
        H = np.asarray(self.H, dtype=float).reshape(p, p)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "J", 0.5 * (J + J.T))
        object.__setattr__(self, "H", 0.5 * (H + H.T))
        if not (self.L > 0.0) or not math.isfinite(self.L):
            raise InvalidParameter(f"cubic regularization L must be positive, got {self.L!r}")

    @property
    def p(self) -> int:
        return self.g.size


@dataclass(frozen=True)
class CubicSolution:
    u: np.ndarray
    r: float
    stationarity_residual: float
    min_eig_certificate: float
    sigma: float = 0.0
    hard_case: bool = False
    iterations: int = 0
    value: float = 0.0


def model_value(inst: CubicInstance, u) -> float:
    u = np.asarray(u, dtype=float)
    if u.shape != (inst.p,):
        raise DimensionMismatch(f"expected u of shape ({inst.p},), got {u.shape}")
    Hu = inst.H @ u
    r = math.sqrt(max(float(u @ Hu), 0.0))
    return float(inst.g @ u + 0.5 * u @ (inst.J @ u) + inst.L / 6.0 * r**3)


def _fix_signs(Q):
    # Deterministic orientation: the largest-magnitude entry of each eigenvector is positive.
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs


def solve_cubic(
    inst: CubicInstance,
    *,
    max_expand: int = 60,
    max_iter: int = 300,
    tol: float = 1e-12,
) -> CubicSolution:
    """Return a certified global minimizer of the cubic model.

    Raises :class:`FactorizationFailure` when ``H`` is not numerically positive
    definite and :class:`NoConvergence` when the secular root cannot be bracketed
    or located.
    """
    p = inst.p
    if p == 0:
        return CubicSolution(u=np.zeros(0), r=0.0, stationarity_residual=0.0, min_eig_certificate=math.inf)
    g, J, H, L = inst.g, inst.J, inst.H, inst.L

    # Barrier Hessians near the boundary span many orders of magnitude; a
    # symmetric diagonal scaling keeps the Cholesky factorization stable.
    dH = np.diag(H)
    if np.any(~np.isfinite(dH)) or np.any(dH <= 0.0):
        raise FactorizationFailure("H has a non-positive diagonal")
    scale = 1.0 / np.sqrt(dH)
    try:
        Cs = np.linalg.cholesky(scale[:, None] * H * scale[None, :])
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure("H is not numerically positive definite") from exc
    C = Cs / scale[:, None]  # H = C C^T, w = C^T u whitens the H-norm
    g_hat = scipy.linalg.solve_triangular(Cs, scale * g, lower=True)
    Ci_J = scipy.linalg.solve_triangular(Cs, scale[:, None] * J * scale[None, :], lower=True)
    J_hat = scipy.linalg.solve_triangular(Cs, Ci_J.T, lower=True)
    J_hat = 0.5 * (J_hat + J_hat.T)
    lam, Q = np.linalg.eigh(J_hat)
    Q = _fix_signs(Q)
    gamma = Q.T @ g_hat

    lam_scale = max(1.0, float(np.max(np.abs(lam))))
    sigma_low = max(0.0, -lam[0])
    # Shifted spectrum lam_i + sigma_low, computed without cancellation.
    base = lam - lam[0] if lam[0] < 0.0 else lam.copy()
    bottom = np.flatnonzero(base <= 1e-12 * lam_scale)
    gnorm = float(np.linalg.norm(g))

    def to_u(w):
        return scale * scipy.linalg.solve_triangular(Cs.T, Q @ w, lower=False)

    def finish(w, sigma, hard, iters):
        u = to_u(w)
        Hu = H @ u
        r = math.sqrt(max(float(u @ Hu), 0.0))
        res = float(np.linalg.norm(g + J @ u + 0.5 * L * r * Hu))
        cert = float(lam[0] + 0.5 * L * r)
        return CubicSolution(
            u=u, r=r, stationarity_residual=res, min_eig_certificate=cert,
            sigma=sigma, hard_case=hard, iterations=iters, value=model_value(inst, u),
        )

    if gnorm == 0.0 and lam[0] >= 0.0:
        return finish(np.zeros(p), 0.0, False, 0)

    # Hard case: no gradient weight on the bottom eigenspace and the shifted
    # solution at sigma_low is too short to satisfy the norm equation.
    if bottom.size and sigma_low > 0.0:
        g_bottom = C @ (Q[:, bottom] @ gamma[bottom])
        if np.linalg.norm(g_bottom) <= 1e-12 * (1.0 + gnorm):
            rest = np.setdiff1d(np.arange(p), bottom)
            w_rest = np.zeros(p)
            w_rest[rest] = -gamma[rest] / base[rest]
            target = 2.0 * sigma_low / L
            short = float(np.linalg.norm(w_rest))
            if short <= target:
                tau = math.sqrt(max(target**2 - short**2, 0.0))
                e = np.zeros(p)
                e[bottom[0]] = tau
                plus, minus = w_rest + e, w_rest - e
                w = plus
                if model_value(inst, to_u(minus)) < model_value(inst, to_u(plus)):
                    w = minus
                return finish(w, sigma_low, True, 0)

    def phi(t):
        d = base + t
        with np.errstate(divide="ignore", invalid="ignore"):
            w = -gamma / d
        w[gamma == 0.0] = 0.0
        nw = float(np.linalg.norm(w))
        return nw - 2.0 * (sigma_low + t) / L, w, nw, d

    lo, hi = 0.0, max(math.sqrt(0.5 * L * float(np.linalg.norm(gamma))), 1e-300)
    for _ in range(max_expand):
        if phi(hi)[0] < 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NoConvergence(
            f"secular root not bracketed after {max_expand} doublings (hi={hi:.3e}, "
            f"lambda_min={lam[0]:.3e}, |g|={gnorm:.3e}, L={L:.3e})"
        )

    t = hi
    for it in range(1, max_iter + 1):
        val, w, nw, d = phi(t)
        sigma = sigma_low + t
        if abs(val) <= tol * (1.0 + 2.0 * sigma / L) or hi - lo <= 4.0 * np.finfo(float).eps * hi:
            return finish(w, sigma, False, it)
        if val > 0.0:
            lo = t
        else:
            hi = t
        if nw > 0.0 and np.all(np.isfinite(w)):
            dnw = -float(np.sum(gamma**2 / d**3)) / nw
            t_new = t - val / (dnw - 2.0 / L)
        else:
            t_new = -1.0
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        t = t_new
    raise NoConvergence(
        f"secular iteration did not converge in {max_iter} steps "
        f"(bracket [{lo:.3e}, {hi:.3e}], residual {val:.3e})"
    )

