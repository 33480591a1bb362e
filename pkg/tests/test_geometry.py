import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adabarrier.barriers import make_log_orthant
from adabarrier.errors import DimensionMismatch, RankDeficient
from adabarrier.geometry import (
    AffineConstraint,
    build_null_basis,
    metric_null_basis,
    project_reduced_data,
    recover_multiplier,
    solve_first_order_kkt,
)
from adabarrier.barriers import LocalMetric

from oracles import bordered_kkt


def _random_instance(rng, n, m):
    A = rng.standard_normal((m, n))
    G = rng.standard_normal((n, n))
    H = G @ G.T + 0.1 * np.eye(n)
    g = rng.standard_normal(n)
    return A, H, g


class TestNullBasis:
    def test_orthonormal_kernel(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((3, 7))
        Z = build_null_basis(AffineConstraint(A, np.zeros(3)))
        assert Z.p == 4
        np.testing.assert_allclose(A @ Z.Z, 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.Z.T @ Z.Z, np.eye(4), atol=1e-12)

    def test_no_constraints(self):
        Z = build_null_basis(AffineConstraint.unconstrained(3))
        np.testing.assert_array_equal(Z.Z, np.eye(3))

    def test_rank_deficient(self):
        A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]])
        with pytest.raises(RankDeficient):
            build_null_basis(AffineConstraint(A, np.zeros(2)))

    def test_full_kernel_trivial(self):
        Z = build_null_basis(AffineConstraint(np.eye(2), np.ones(2)))
        assert Z.p == 0

    def test_bad_b(self):
        with pytest.raises(DimensionMismatch):
            AffineConstraint(np.ones((1, 3)), np.ones(2))


class TestKkt:
    def test_scalar_slice(self):
        # min <g,v> + |v|^2/2 on v1 + v2 = 0 with g = (1, -1): v = (-1, 1).
        c = AffineConstraint(np.array([[1.0, 1.0]]), np.array([0.0]))
        v, y = solve_first_order_kkt(np.eye(2), c, np.array([1.0, -1.0]))
        np.testing.assert_allclose(v, [-1.0, 1.0])
        np.testing.assert_allclose(y, [0.0], atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 20))
    def test_matches_bordered_system(self, seed, n):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(0, n))
        A, H, g = _random_instance(rng, n, m)
        c = AffineConstraint(A, np.zeros(m))
        v, y = solve_first_order_kkt(H, c, g)
        if m:
            v_ref, y_ref = bordered_kkt(H, A, g)
        else:
            v_ref, y_ref = np.linalg.solve(H, -g), np.zeros(0)
        scale = 1.0 + np.linalg.norm(v_ref)
        assert np.linalg.norm(v - v_ref) <= 1e-8 * scale
        assert np.linalg.norm(y - y_ref) <= 1e-8 * (1.0 + np.linalg.norm(y_ref))
        # <g, v> = -||v||_H^2 for the barrier KKT direction.
        assert g @ v == pytest.approx(-(v @ H @ v), rel=1e-8)

    def test_metric_basis_on_extreme_scales(self):
        b = make_log_orthant(4)
        x = np.array([1e-9, 1.0, 3.0, 1e-7])
        H = b.hessian(x)
        c = AffineConstraint(np.array([[1.0, 2.0, -1.0, 0.5]]), np.zeros(1))
        W = metric_null_basis(build_null_basis(c), LocalMetric.from_hessian(H).factor)
        np.testing.assert_allclose(W.T @ H @ W, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(c.A @ W, 0.0, atol=1e-12)

    def test_reduced_data_shapes(self):
        rng = np.random.default_rng(1)
        A, H, g = _random_instance(rng, 5, 2)
        Z = build_null_basis(AffineConstraint(A, np.zeros(2)))
        J = rng.standard_normal((5, 5))
        g_r, J_r, H_r = project_reduced_data(Z, g, J, H)
        assert g_r.shape == (3,) and J_r.shape == (3, 3)
        np.testing.assert_allclose(J_r, J_r.T)
        np.testing.assert_allclose(H_r, Z.Z.T @ H @ Z.Z)

    def test_recover_multiplier_consistent(self):
        A = np.array([[1.0, 2.0, 3.0]])
        y = recover_multiplier(AffineConstraint(A, np.zeros(1)), A.T @ np.array([2.5]))
        np.testing.assert_allclose(y, [2.5])
