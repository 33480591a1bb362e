import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adabarrier.barriers import (
    LocalMetric,
    Region,
    dikin_step_feasible,
    dual_local_norm,
    estimate_barrier_parameter,
    local_norm,
    make_log_ball,
    make_log_box,
    make_log_orthant,
    omega,
    sum_barriers,
)
from adabarrier.checks import barrier_suite
from adabarrier.errors import (
    DimensionMismatch,
    InvalidBounds,
    InvalidDimension,
    InvalidRadius,
    OutOfRange,
    OutsideDomain,
)


class TestOrthant:
    def test_values_at_ones(self):
        b = make_log_orthant(2)
        x = np.ones(2)
        assert b.value(x) == 0.0
        np.testing.assert_array_equal(b.gradient(x), [-1.0, -1.0])
        np.testing.assert_array_equal(b.hessian(x), np.eye(2))
        g = b.gradient(x)
        assert g @ np.linalg.solve(b.hessian(x), g) == pytest.approx(2.0)
        assert b.nu == 2.0

    def test_value_sums_logs(self):
        b = make_log_orthant(3)
        assert b.value(np.array([2.0, 1.0, 0.5])) == pytest.approx(0.0, abs=1e-15)

    def test_zero_dimension_rejected(self):
        with pytest.raises(InvalidDimension):
            make_log_orthant(0)

    def test_outside(self):
        b = make_log_orthant(2)
        x = np.array([1.0, 0.0])
        assert b.domain_test(x) is Region.BOUNDARY_OR_OUTSIDE
        assert b.value(x) == math.inf
        with pytest.raises(OutsideDomain):
            b.gradient(x)


class TestBox:
    def test_midpoint(self):
        b = make_log_box([0.0], [2.0])
        x = np.array([1.0])
        assert b.value(x) == pytest.approx(0.0)
        assert b.gradient(x)[0] == pytest.approx(0.0)
        assert b.hessian(x)[0, 0] == pytest.approx(2.0)

    def test_gradient_off_center(self):
        b = make_log_box([0.0], [2.0])
        assert b.gradient(np.array([1.5]))[0] == pytest.approx(-1 / 1.5 + 1 / 0.5)

    def test_parameter_at_center(self):
        b = make_log_box([0.0, 0.0], [1.0, 1.0])
        x = np.array([0.5, 0.5])
        g = b.gradient(x)
        assert g @ np.linalg.solve(b.hessian(x), g) == pytest.approx(0.0)
        assert b.nu == 4.0

    def test_bad_bounds(self):
        with pytest.raises(InvalidBounds):
            make_log_box([1.0], [1.0])


class TestBall:
    def test_center(self):
        b = make_log_ball(np.zeros(2), 1.0)
        assert b.value(np.zeros(2)) == pytest.approx(0.0)
        np.testing.assert_allclose(b.gradient(np.zeros(2)), 0.0)

    def test_one_dimensional_values(self):
        b = make_log_ball(np.zeros(1), 1.0)
        x = np.array([0.5])
        assert b.value(x) == pytest.approx(-math.log(0.75))
        assert b.gradient(x)[0] == pytest.approx(2 * 0.5 / 0.75)

    def test_stored_parameter_bounds_sampled_sup(self):
        b = make_log_ball(np.zeros(2), 1.0)
        nu_hat = estimate_barrier_parameter(b, n_directions=32, n_radii=100, seed=3)
        assert nu_hat <= b.nu
        assert b.nu >= 1.0

    def test_bad_radius(self):
        with pytest.raises(InvalidRadius):
            make_log_ball(np.zeros(2), 0.0)


class TestSum:
    def test_two_orthants(self):
        b = sum_barriers(make_log_orthant(2), make_log_orthant(2))
        assert b.nu == 4.0
        np.testing.assert_allclose(b.hessian(np.ones(2)), 2 * np.eye(2))

    def test_orthant_plus_box(self):
        b = sum_barriers(make_log_orthant(1), make_log_box([0.0], [2.0]))
        x = np.array([1.0])
        assert b.value(x) == pytest.approx(0.0)
        assert b.gradient(x)[0] == pytest.approx(-1.0)

    def test_intersection_domain(self):
        b = sum_barriers(make_log_orthant(1), make_log_box([-2.0], [2.0]))
        assert b.domain_test(np.array([-1.0])) is Region.BOUNDARY_OR_OUTSIDE

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            sum_barriers(make_log_orthant(1), make_log_orthant(2))


class TestNorms:
    def test_identity_metric(self):
        m = LocalMetric.from_hessian(np.eye(2))
        assert local_norm(m, np.array([3.0, 4.0])) == pytest.approx(5.0)
        assert dual_local_norm(m, np.array([3.0, 4.0])) == pytest.approx(5.0)
        assert local_norm(m, np.zeros(2)) == 0.0

    def test_orthant_scalar(self):
        m = LocalMetric.at(make_log_orthant(1), np.array([0.5]))
        assert local_norm(m, np.array([1.0])) == pytest.approx(2.0)
        assert dual_local_norm(m, np.array([1.0])) == pytest.approx(0.5)

    def test_wrong_dimension(self):
        m = LocalMetric.from_hessian(np.eye(2))
        with pytest.raises(DimensionMismatch):
            local_norm(m, np.ones(3))

    def test_badly_scaled_diagonal_factors(self):
        m = LocalMetric.from_hessian(np.diag([1e18, 1e-4]))
        assert local_norm(m, np.array([1e-9, 1.0])) == pytest.approx(math.sqrt(1.0 + 1e-4))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_duality_and_identity(self, seed):
        rng = np.random.default_rng(seed)
        b = make_log_box(-np.ones(3), np.ones(3))
        x = b.random_interior(rng, 1)[0]
        m = LocalMetric.at(b, x)
        s, v = rng.standard_normal(3), rng.standard_normal(3)
        assert abs(s @ v) <= dual_local_norm(m, s) * local_norm(m, v) * (1 + 1e-12)
        assert dual_local_norm(m, b.hessian(x) @ v) == pytest.approx(local_norm(m, v), rel=1e-10)


class TestOmega:
    def test_limit_and_value(self):
        assert omega(0.0) == 0.5
        assert omega(1e-6) == pytest.approx(0.5, rel=1e-5)
        assert omega(0.5) == pytest.approx((-0.5 - math.log(0.5)) / 0.25, rel=1e-14)

    def test_series_branch_matches_closed_form_near_crossover(self):
        t = 2e-4
        closed = (-t - math.log1p(-t)) / t**2
        assert omega(t) == pytest.approx(closed, rel=1e-9)
        assert omega(0.99e-4) == pytest.approx(0.5 + 0.99e-4 / 3, rel=1e-8)

    @given(st.floats(min_value=0.0, max_value=0.999999))
    def test_upper_bound(self, t):
        assert omega(t) <= 1.0 / (2.0 * (1.0 - t)) * (1 + 1e-12)

    @pytest.mark.parametrize("t", [1.0, 1.5, -0.1])
    def test_out_of_range(self, t):
        with pytest.raises(OutOfRange):
            omega(t)


class TestDikin:
    def test_examples(self):
        m = LocalMetric.from_hessian(np.eye(1))
        assert dikin_step_feasible(m, np.array([0.4]), 1.0)
        assert not dikin_step_feasible(m, np.array([4.0]), 0.25)

    def test_orthant_step(self):
        b = make_log_orthant(1)
        m = LocalMetric.at(b, np.array([1.0]))
        assert dikin_step_feasible(m, np.array([-0.9]), 1.0)
        assert b.is_interior(np.array([0.1]))


@pytest.mark.parametrize(
    "barrier",
    [
        make_log_orthant(4),
        make_log_box(np.zeros(3), np.array([1.0, 2.0, 3.0])),
        make_log_ball(np.ones(3), 2.0),
        sum_barriers(make_log_orthant(2), make_log_ball(np.ones(2), 1.0)),
    ],
    ids=["orthant", "box", "ball", "sum"],
)
def test_validity_suite(barrier):
    failures = [r.line() for r in barrier_suite(barrier, samples=100, seed=1) if not r.passed]
    assert not failures
