import numpy as np
import pytest

from adabarrier.checks import problem_suite
from adabarrier.cli import solve_bundle
from adabarrier.errors import InputError, InvalidData, InvalidParameter
from adabarrier.model import fd_check_gradient, fd_check_hessian
from adabarrier.problems import (
    build_box_qp,
    build_lp_regression,
    build_poisson,
    make_problem,
    random_poisson,
)
from adabarrier.results import Status


class TestPoisson:
    def _bundle(self):
        # One signal coordinate, two observations, both with z = 1.
        return build_poisson(np.array([[1.0], [2.0]]), np.array([1.0, 1.0]), alpha=1.0, p=0.5)

    def test_gradient_blocks(self):
        b = self._bundle()
        g = b.objective.gradient(np.array([4.0, 2.0, 2.0]))
        assert g[0] == pytest.approx(0.25)
        np.testing.assert_allclose(g[1:], [0.5, 0.5])

    def test_hessian_block(self):
        b = self._bundle()
        H = b.objective.hessian(np.array([4.0, 2.0, 2.0]))
        np.testing.assert_allclose(np.diag(H)[1:], [0.25, 0.25])
        assert H[0, 0] == pytest.approx(0.5 * -0.5 * 4.0**-1.5)

    def test_start_point(self):
        b = self._bundle()
        np.testing.assert_array_equal(b.x_start, [1.0, 1.0, 2.0])
        assert b.constraint.residual(b.x_start) == 0.0
        assert b.barrier.nu == 3.0

    def test_constraint_rank(self):
        b = random_poisson(n=12, m=5, seed=3)
        assert np.linalg.matrix_rank(b.constraint.A) == 5

    @pytest.mark.parametrize(
        "Phi,z",
        [
            (np.array([[1.0, -1.0]]), np.array([1.0])),
            (np.array([[1.0, 0.0]]), np.array([1.0])),
            (np.array([[1.0, 1.0]]), np.array([-1.0])),
        ],
    )
    def test_bad_data(self, Phi, z):
        with pytest.raises(InvalidData):
            build_poisson(Phi, z, alpha=1.0, p=0.5)

    def test_bad_exponent(self):
        with pytest.raises(InvalidParameter):
            build_poisson(np.ones((1, 1)), np.ones(1), alpha=1.0, p=1.0)


class TestBoxQp:
    def test_seed_determinism(self):
        a = build_box_qp(n=6, seed=11)
        b = build_box_qp(n=6, seed=11)
        x = np.linspace(0.1, 0.9, 6)
        np.testing.assert_array_equal(a.objective.hessian(x), b.objective.hessian(x))
        np.testing.assert_array_equal(a.objective.gradient(x), b.objective.gradient(x))

    def test_curvature_share(self):
        Q = build_box_qp(n=10, seed=1, negative_curvature_fraction=0.3).objective.hessian(np.zeros(10))
        assert np.sum(np.linalg.eigvalsh(Q) < 0) == 3
        Q0 = build_box_qp(n=10, seed=1, negative_curvature_fraction=0.0).objective.hessian(np.zeros(10))
        assert np.linalg.eigvalsh(Q0)[0] > 0

    def test_bad_fraction(self):
        with pytest.raises(InvalidParameter):
            build_box_qp(n=4, negative_curvature_fraction=1.5)

    def test_convex_variant_matches_interior_point_baseline(self):
        cp = pytest.importorskip("cvxpy")
        n = 12
        b = build_box_qp(n=n, seed=9, negative_curvature_fraction=0.0)
        Q = b.objective.hessian(np.zeros(n))
        c_lin = b.objective.gradient(np.zeros(n))
        x = cp.Variable(n)
        prob = cp.Problem(
            cp.Minimize(0.5 * cp.quad_form(x, cp.psd_wrap(Q)) + c_lin @ x),
            [x >= 0, x <= 1, cp.sum(x) == 0.4 * n],
        )
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
        out = solve_bundle(b, "sahba", 1e-7)
        assert out.status is Status.CONVERGED
        assert np.linalg.norm(out.x - x.value) <= 1e-4
        assert out.f_final == pytest.approx(prob.value, abs=1e-6)


class TestLpRegression:
    def test_power_term_derivative_at_one(self):
        b = build_lp_regression(n=3, lam=0.2, p=0.5, seed=0)
        base = build_lp_regression(n=3, lam=1e-300, p=0.5, seed=0)
        x = np.ones(3)
        diff = b.objective.gradient(x) - base.objective.gradient(x)
        np.testing.assert_allclose(diff, 0.2 * 0.5, rtol=1e-12)

    def test_gradient_blows_up_near_zero(self):
        lam, p = 0.1, 0.5
        b = build_lp_regression(n=2, lam=lam, p=p, seed=0)
        base = build_lp_regression(n=2, lam=1e-300, p=p, seed=0)

        def power_part(t):
            x = np.array([t, 1.0])
            return (b.objective.gradient(x) - base.objective.gradient(x))[0]

        # lam p t**(p-1) reaches 1e3 lam p at t = 1e-6 and keeps growing.
        assert power_part(1e-6) == pytest.approx(1e3 * lam * p, rel=1e-9)
        assert power_part(1e-8) > 1e3 * lam * p
        assert power_part(1e-8) > power_part(1e-6) > power_part(1e-4)

    def test_fd_gradient_at_random_points(self):
        b = build_lp_regression(n=6, seed=2)
        rng = np.random.default_rng(0)
        for x in b.sample_interior(rng, 20):
            assert fd_check_gradient(b.objective, x, barrier=b.barrier) <= 1e-5
            assert fd_check_hessian(b.objective, x, barrier=b.barrier) <= 1e-4

    def test_bad_exponent(self):
        with pytest.raises(InvalidParameter):
            build_lp_regression(p=0.0)


class TestRegistry:
    @pytest.mark.parametrize("name", ["poisson", "box_qp", "lp_regression"])
    def test_suites_pass(self, name):
        b = make_problem(name, n=8)
        failures = [r.line() for r in problem_suite(b, samples=10, seed=0) if not r.passed]
        assert not failures

    def test_unknown_name(self):
        with pytest.raises(InputError):
            make_problem("rosenbrock")

    def test_bad_keyword(self):
        with pytest.raises(InvalidParameter):
            make_problem("box_qp", colour="red")
