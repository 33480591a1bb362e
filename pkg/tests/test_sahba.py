import math
import warnings

import numpy as np
import pytest
import scipy.optimize

from adabarrier.cli import solve_bundle
from adabarrier.errors import InvalidParameter
from adabarrier.model import ObjectiveModel, Potential
from adabarrier.problems import box_qp_from_data, build_box_qp
from adabarrier.results import Status
from adabarrier.sahba import (
    SahbaConfig,
    SahbaState,
    run_sahba,
    sahba_inner_budget,
    sahba_step,
    sahba_step_size,
    sahba_threshold,
)

from helpers import free, unit_box, zero_objective
from oracles import projected_gradient_qp


class TestArithmetic:
    def test_threshold(self):
        # sqrt(0.012 / (12 * 1.728)) = sqrt(1/1728)
        assert sahba_threshold(0.012, 1.728, 1.0) == pytest.approx(math.sqrt(0.012 / (12 * 1.728)))
        assert sahba_threshold(0.012, 1.728, 1.0) == pytest.approx(1.0 / math.sqrt(1728.0))

    def test_step_size_regimes(self):
        assert sahba_step_size(0.3) == 1.0
        assert sahba_step_size(0.5) == 1.0
        assert sahba_step_size(2.0) == pytest.approx(0.25)

    def test_default_and_clamped_estimate(self):
        assert SahbaConfig(eps=1e-2).M0 == pytest.approx(1.44)
        assert SahbaConfig(eps=1e-3).M0 == 1.0
        with pytest.warns(RuntimeWarning):
            cfg = SahbaConfig(eps=1e-2, M0=0.5)
        assert cfg.M0 == pytest.approx(1.44)

    def test_budget_floor(self):
        assert sahba_inner_budget(0, 1.0, 1.0) == pytest.approx(2 + 2 + 1)

    def test_validation(self):
        with pytest.raises(InvalidParameter):
            SahbaConfig(eps=-1.0)

    def test_needs_hessian(self):
        obj = ObjectiveModel(1, lambda x: 0.0, lambda x: np.zeros(1))
        pot = Potential(obj, unit_box(1), 0.1)
        with pytest.raises(InvalidParameter):
            sahba_step(SahbaState(x=np.array([0.3]), M=1.0), pot, free(1), cfg=SahbaConfig(eps=0.1))


class TestBehaviour:
    def test_quadratic_accepted_at_first_trial(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out = solve_bundle(build_box_qp(n=10, seed=2), "sahba", 1e-2, estimate=1e-6)
        assert out.status is Status.CONVERGED
        assert all(r.inner == 0 for r in out.trace)

    def test_zero_objective(self):
        pot = Potential(zero_objective(3), unit_box(3), 0.0)
        out = run_sahba(pot, free(3), [0.2, 0.7, 0.4], SahbaConfig(eps=1e-2))
        assert out.status is Status.CONVERGED
        assert out.second_order.passed
        assert out.certificate.xi < 1.0

    def test_taken_rows_decrease_and_stay_feasible(self):
        out = solve_bundle(build_box_qp(n=10, seed=4), "sahba", 1e-2)
        taken = [r for r in out.trace if r.taken]
        assert len(taken) == out.iterations
        for r in taken:
            assert r.interior and r.feas <= 1e-10
            assert r.alpha * r.vnorm <= 0.5 + 1e-12
            assert r.Fmu <= r.Fmu_base + 1e-10
            if r.vnorm >= r.threshold:
                assert r.Fmu - r.Fmu_base <= -(r.vnorm**3) * r.estimate * r.alpha**2 / 24 + 1e-10

    def test_phase_switch(self):
        out = solve_bundle(build_box_qp(n=10, seed=4), "sahba", 1e-2)
        for r in out.trace:
            assert r.alpha == (1.0 if r.vnorm <= 0.5 else pytest.approx(1.0 / (2.0 * r.vnorm)))

    def test_stopping_outputs_unmoved_point(self):
        out = solve_bundle(build_box_qp(n=10, seed=4), "sahba", 1e-2)
        last = [r for r in out.trace if r.taken][-1]
        assert out.status is Status.CONVERGED
        assert out.vnorm_final < out.threshold_final
        assert out.f_final == pytest.approx(last.f)

    def test_count_ratio_quarter_eps(self):
        b = build_box_qp(n=20, seed=7)
        k1 = solve_bundle(b, "sahba", 1e-2).iterations
        k2 = solve_bundle(b, "sahba", 2.5e-3).iterations
        assert k2 / k1 <= 9

    def test_convex_qp_matches_projected_gradient(self):
        b = build_box_qp(n=20, seed=7, negative_curvature_fraction=0.0)
        Q = b.objective.hessian(np.zeros(20))
        c_lin = b.objective.gradient(np.zeros(20))
        ref = projected_gradient_qp(Q, c_lin, 0.0, 1.0, a_sum=0.4 * 20)
        out = solve_bundle(b, "sahba", 1e-6)
        assert out.status is Status.CONVERGED
        assert np.linalg.norm(out.x - ref) <= 1e-3

    def test_one_dimensional_concave_box(self):
        # f = -x^2/2 on (0, 2) starting at the center, where the gradient vanishes
        # and only negative curvature moves the iterate.
        b = box_qp_from_data([[-1.0]], [0.0], [0.0], [2.0])
        out = solve_bundle(b, "sahba", 1e-3)
        assert out.status is Status.CONVERGED
        mu = out.mu
        root = scipy.optimize.brentq(lambda x: -x - mu / x + mu / (2.0 - x), 1.5, 2.0 - 1e-12)
        assert out.x[0] == pytest.approx(root, abs=1e-4)
        assert out.second_order.passed
        assert out.certificate.eps_bound <= 1e-3
