"""Small builders shared by the solver tests."""

import numpy as np

from adabarrier.barriers import make_log_box, make_log_orthant
from adabarrier.geometry import AffineConstraint
from adabarrier.model import ObjectiveModel, Potential


def half_square(n=1):
    return ObjectiveModel(n, lambda x: 0.5 * float(x @ x), lambda x: x.copy(), lambda x: np.eye(n))


def zero_objective(n):
    return ObjectiveModel(n, lambda x: 0.0, lambda x: np.zeros(n), lambda x: np.zeros((n, n)))


def linear_objective(c_lin):
    c_lin = np.asarray(c_lin, dtype=float)
    n = c_lin.size
    return ObjectiveModel(n, lambda x: float(c_lin @ x), lambda x: c_lin.copy(), lambda x: np.zeros((n, n)))


def scalar_orthant_potential(mu):
    return Potential(half_square(1), make_log_orthant(1), mu)


def unit_box(n):
    return make_log_box(np.zeros(n), np.ones(n))


def free(n):
    return AffineConstraint.unconstrained(n)


def feasible_everywhere(rows):
    return all(r.feas <= 1e-10 and r.interior for r in rows if r.taken)


def random_instance(rng, p=None):
    p = p or int(rng.integers(1, 5))
    G = rng.standard_normal((p, p))
    H = G @ G.T + 0.2 * np.eye(p)
    J = rng.standard_normal((p, p))
    J = J + J.T
    g = rng.standard_normal(p)
    L = float(np.exp(rng.uniform(-1.0, 2.0)))
    return g, J, H, L


def hard_instance(rng, p=None):
    """Gradient orthogonal (in H-whitened space) to the bottom eigenvector of J."""
    p = p or int(rng.integers(2, 5))
    G = rng.standard_normal((p, p))
    H = G @ G.T + 0.5 * np.eye(p)
    C = np.linalg.cholesky(H)
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    lam = np.sort(rng.uniform(-3.0, 3.0, p))
    lam[0] = -abs(lam[0]) - 1.0
    Jw = (Q * lam) @ Q.T
    gw = Q[:, 1:] @ (0.05 * rng.standard_normal(p - 1))
    J = C @ Jw @ C.T
    g = C @ gw
    return g, J, H, 1.0
