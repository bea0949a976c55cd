import math

import numpy as np
import pytest

from levy_saddle.bracketing import bisect
from levy_saddle.errors import DomainError
from levy_saddle.scale import w
from levy_saddle.sp import (
    SpCase,
    SpCostDerived,
    gamma_bar,
    gamma_cap,
    gamma_cap_raw,
    gamma_low,
    j_ab_sp,
    solve_sp,
    thresholds,
    upsilon_at_B,
    value_sp,
    value_sp_prime,
    value_sp_second,
)

from conftest import make_costs


@pytest.fixture(scope="module")
def eq_sp_uv(rep_sp_uv, default_costs):
    return solve_sp(rep_sp_uv, default_costs)


@pytest.fixture(scope="module")
def eq_sp_bv(rep_sp_bv, default_costs):
    return solve_sp(rep_sp_bv, default_costs)


@pytest.fixture(scope="module")
def eq_collapsed(rep_sp_bv):
    return solve_sp(rep_sp_bv, make_costs(alpha_h=10.0))


@pytest.fixture(scope="module")
def eq_no_control(rep_sp_uv):
    return solve_sp(rep_sp_uv, make_costs(alpha_h=0.04))


class TestGammaCap:
    def test_diagonal_value(self, rep_sp_bv, rep_sp_uv, default_costs):
        for rep in (rep_sp_bv, rep_sp_uv):
            d = SpCostDerived.from_costs(default_costs, rep)
            for b in (0.0, 1.5, 4.0):
                want = 1.0 + default_costs.K_g + w(rep, 0.0) * d.h_hat(b)
                assert gamma_cap(rep, default_costs, b, b) == pytest.approx(want, abs=1e-9)
        # with a diffusion part W(0) = 0, so the diagonal value is 1 + K
        assert gamma_cap(rep_sp_uv, default_costs, 2.0, 2.0) == pytest.approx(2.0, abs=1e-9)

    def test_matches_raw_definition(self, rep_sp_uv, rep_sp_bv, default_costs):
        for rep in (rep_sp_uv, rep_sp_bv):
            for a, b in ((0.0, 2.0), (-1.0, 1.5), (1.0, 5.0)):
                assert gamma_cap(rep, default_costs, a, b) == pytest.approx(
                    gamma_cap_raw(rep, default_costs, a, b), rel=1e-8
                )

    def test_far_left_limit_at_b_over(self, rep_sp_uv):
        costs = make_costs(alpha_h=0.04)
        th = thresholds(costs, rep_sp_uv)
        limit = 1.0 - costs.alpha_h / rep_sp_uv.q
        g60 = gamma_cap(rep_sp_uv, costs, th.b_over - 60.0, th.b_over)
        g120 = gamma_cap(rep_sp_uv, costs, th.b_over - 120.0, th.b_over)
        # decay rate is the smallest Re xi (~0.088), so 60 units only buys ~1e-2
        assert abs(g60 - limit) < 1e-2
        assert abs(g120 - limit) < 1e-3
        assert abs(g120 - limit) <= abs(g60 - limit)
        assert gamma_cap(rep_sp_uv, costs, -math.inf, th.b_over) == pytest.approx(
            limit, abs=1e-9
        )


class TestGammaLow:
    def test_negative_below_b_under(self, rep_sp_uv, default_costs):
        th = thresholds(default_costs, rep_sp_uv)
        b = th.b_under - 0.5
        for a in np.linspace(b - 6.0, b - 0.05, 9):
            assert gamma_low(rep_sp_uv, default_costs, a, b) < 0.0

    def test_vanishing_ratio_at_b_over(self, rep_sp_uv, default_costs):
        th = thresholds(default_costs, rep_sp_uv)
        val = gamma_low(rep_sp_uv, default_costs, th.b_over - 80.0, th.b_over)
        assert abs(val / w(rep_sp_uv, 80.0)) <= 1e-6

    def test_is_a_derivative_of_gamma_cap(self, rep_sp_uv, default_costs):
        a, b, eps = 0.0, 2.0, 1e-6
        fd = (
            gamma_cap(rep_sp_uv, default_costs, a + eps, b)
            - gamma_cap(rep_sp_uv, default_costs, a - eps, b)
        ) / (2.0 * eps)
        assert gamma_low(rep_sp_uv, default_costs, a, b) == pytest.approx(fd, rel=1e-6)

    def test_single_sign_change_in_a(self, rep_sp_uv, default_costs, eq_sp_uv):
        b = eq_sp_uv.b_star
        grid = np.linspace(b - 15.0, b - 1e-4, 500)
        signs = np.sign([gamma_low(rep_sp_uv, default_costs, a, b) for a in grid])
        assert np.sum(signs[:-1] != signs[1:]) == 1


class TestThresholds:
    def test_ordering_and_spacing(self, rep_sp_uv, rep_sp_bv, default_costs):
        for rep in (rep_sp_uv, rep_sp_bv):
            th = thresholds(default_costs, rep)
            assert th.b_under < th.b_over
            assert th.b_over - th.b_under == pytest.approx(
                1.0 / rep.roots.phi_q, abs=1e-10
            )
            d = SpCostDerived.from_costs(default_costs, rep)
            assert d.h_hat(th.b_under) == pytest.approx(0.0, abs=1e-10)
            assert rep.roots.phi_q * d.h_hat(th.b_over) + d.alpha_hat == pytest.approx(
                0.0, abs=1e-10
            )

    def test_bounded_variation_point(self, rep_sp_bv, rep_sp_uv, default_costs):
        th = thresholds(default_costs, rep_sp_bv)
        assert th.B > th.b_under
        d = SpCostDerived.from_costs(default_costs, rep_sp_bv)
        assert d.h_hat(th.B) == pytest.approx(
            -rep_sp_bv.model.delta * (1.0 + default_costs.K_g), abs=1e-10
        )
        # equivalently -(1 + K)/W(0)
        assert d.h_hat(th.B) == pytest.approx(
            -(1.0 + default_costs.K_g) / w(rep_sp_bv, 0.0), rel=1e-9
        )
        assert math.isnan(thresholds(default_costs, rep_sp_uv).B)


class TestUpsilon:
    def test_interior_arithmetic(self, rep_sp_bv):
        # q = 0.05, kappa = 2.5, K = 1, alpha = 1: 2.55 * 2 - 1.05 = 4.05
        assert upsilon_at_B(make_costs(alpha_h=1.0), rep_sp_bv) == pytest.approx(
            4.05, abs=1e-12
        )

    def test_collapsed_arithmetic(self, rep_sp_bv):
        assert upsilon_at_B(make_costs(alpha_h=10.0), rep_sp_bv) == pytest.approx(
            5.1 - 10.05, abs=1e-12
        )

    def test_limit_as_K_to_minus_one(self, rep_sp_bv):
        costs = make_costs(alpha_h=1.0, K_g=-1.0 + 1e-9)
        d = SpCostDerived.from_costs(costs, rep_sp_bv)
        assert upsilon_at_B(costs, rep_sp_bv) == pytest.approx(-d.alpha_hat, abs=1e-8)

    def test_domain_error_with_diffusion(self, rep_sp_uv):
        with pytest.raises(DomainError):
            upsilon_at_B(make_costs(), rep_sp_uv)


class TestSolve:
    def test_no_control_dispatch(self, eq_no_control, rep_sp_uv):
        th = thresholds(make_costs(alpha_h=0.04), rep_sp_uv)
        assert eq_no_control.case_tag is SpCase.NO_CONTROL
        assert math.isinf(eq_no_control.a_star) and eq_no_control.a_star < 0
        assert eq_no_control.b_star == pytest.approx(th.b_over, abs=1e-12)

    def test_interior_dispatch(self, eq_sp_uv, eq_sp_bv):
        for eq in (eq_sp_uv, eq_sp_bv):
            assert eq.case_tag is SpCase.INTERIOR
            assert eq.b_under < eq.b_star < eq.b_over
            assert abs(eq.residual_cap) <= 1e-8
            assert abs(eq.residual_low) <= 1e-8
        assert eq_sp_bv.b_star < eq_sp_bv.B

    def test_collapsed_dispatch(self, eq_collapsed, rep_sp_bv):
        th = thresholds(make_costs(alpha_h=10.0), rep_sp_bv)
        assert eq_collapsed.case_tag is SpCase.COLLAPSED
        assert eq_collapsed.a_star == eq_collapsed.b_star == pytest.approx(th.B, abs=1e-12)
        assert abs(gamma_cap(rep_sp_bv, make_costs(alpha_h=10.0), th.B, th.B)) <= 1e-9

    def test_sign_scan_around_interior_solution(self, rep_sp_uv, default_costs, eq_sp_uv):
        a, b = eq_sp_uv.a_star, eq_sp_uv.b_star
        h = 0.25
        assert gamma_low(rep_sp_uv, default_costs, a - h, b) < 0.0
        assert gamma_low(rep_sp_uv, default_costs, a + h, b) > 0.0
        assert gamma_cap(rep_sp_uv, default_costs, a - h, b) > 0.0
        assert gamma_cap(rep_sp_uv, default_costs, a + h, b) > 0.0
        # b* is the first zero: the minimized functional stays positive below it
        for bb in np.linspace(eq_sp_uv.b_under, b - 0.05, 10):
            aa = a if bb > a else bb
            assert gamma_cap(rep_sp_uv, default_costs, min(aa, bb), bb) > 0.0

    def test_shrinking_b_of_a(self, rep_sp_uv, default_costs, eq_sp_uv):
        # the stopper's best response grows as the reflection barrier drops
        def b_of(a):
            f = lambda b: gamma_cap(rep_sp_uv, default_costs, a, b)
            lo = max(eq_sp_uv.b_under, a + 1e-9)
            hi = eq_sp_uv.b_over
            while f(hi) > 0.0:
                hi += 1.0
            return bisect(f, lo, hi, f(lo), f(hi), xtol=1e-10)

        a_star = eq_sp_uv.a_star
        bs = [b_of(a) for a in (a_star - 1.5, a_star - 1.0, a_star - 0.5)]
        assert bs[0] > bs[1] > bs[2] > eq_sp_uv.b_star
        for a, b in zip((a_star - 1.5, a_star - 1.0, a_star - 0.5), bs):
            for x in np.linspace(a - 2.0, a, 5):
                assert gamma_low(rep_sp_uv, default_costs, x, b) <= 1e-10


class TestCostOfBarrierPair:
    def test_terminal_region(self, rep_sp_uv, default_costs):
        a, b = 0.0, 2.0
        assert j_ab_sp(rep_sp_uv, default_costs, a, b, b + 1.0) == pytest.approx(
            default_costs.g(b + 1.0), abs=1e-10
        )

    def test_reflection_linearity(self, rep_sp_uv, default_costs):
        a, b = 0.0, 2.0
        at_a = j_ab_sp(rep_sp_uv, default_costs, a, b, a)
        assert j_ab_sp(rep_sp_uv, default_costs, a, b, a - 2.0) == pytest.approx(
            2.0 + at_a, abs=1e-12
        )

    def test_matches_value_at_solution(self, rep_sp_uv, default_costs, eq_sp_uv):
        for x in np.linspace(eq_sp_uv.a_star, eq_sp_uv.b_star, 7):
            assert j_ab_sp(
                rep_sp_uv, default_costs, eq_sp_uv.a_star, eq_sp_uv.b_star, x
            ) == pytest.approx(value_sp(eq_sp_uv, x), abs=1e-8)


class TestValueFunction:
    def test_collapsed_piecewise_slopes(self, eq_collapsed):
        B = eq_collapsed.b_star
        K = eq_collapsed.costs.K_g
        assert value_sp_prime(eq_collapsed, B - 0.5) == -1.0
        assert value_sp_prime(eq_collapsed, B + 0.5) == K
        # continuous across the kink
        assert value_sp(eq_collapsed, B - 1e-9) == pytest.approx(
            value_sp(eq_collapsed, B), abs=1e-8
        )

    def test_interior_second_order_fit_at_a(self, eq_sp_uv, eq_sp_bv):
        for eq in (eq_sp_uv, eq_sp_bv):
            assert abs(value_sp_second(eq, eq.a_star + 1e-9)) < 1e-7
            assert value_sp_prime(eq, eq.a_star + 1e-12) == pytest.approx(-1.0, abs=1e-8)

    def test_bounded_variation_derivative_jump_at_b(self, eq_sp_bv, rep_sp_bv):
        d = SpCostDerived.from_costs(eq_sp_bv.costs, rep_sp_bv)
        left = value_sp_prime(eq_sp_bv, eq_sp_bv.b_star - 1e-12)
        want = eq_sp_bv.costs.K_g + w(rep_sp_bv, 0.0) * d.h_hat(eq_sp_bv.b_star)
        assert left == pytest.approx(want, abs=1e-8)
        assert left < eq_sp_bv.costs.K_g

    def test_no_control_matches_direct_formula(self, eq_no_control, rep_sp_uv):
        costs = eq_no_control.costs
        for x in (eq_no_control.b_star - 5.0, eq_no_control.b_star - 1.0):
            want = gamma_bar(rep_sp_uv, costs, x, eq_no_control.b_star) - x + eq_no_control.b_star
            assert value_sp(eq_no_control, x) == pytest.approx(want, abs=1e-12)

    def test_convexity(self, eq_sp_uv, eq_sp_bv, eq_collapsed, eq_no_control):
        for eq in (eq_sp_uv, eq_sp_bv, eq_collapsed, eq_no_control):
            lo = eq.b_star - 6.0 if math.isinf(eq.a_star) else eq.a_star - 2.0
            grid = np.linspace(lo, eq.b_star + 2.0, 400)
            vals = np.array([value_sp(eq, x) for x in grid])
            second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
            assert second.min() >= -1e-7

    def test_bounds(self, eq_sp_uv, eq_sp_bv):
        for eq in (eq_sp_uv, eq_sp_bv):
            K = eq.costs.K_g
            grid = np.linspace(eq.a_star - 2.0, eq.b_star + 2.0, 300)
            for x in grid:
                assert value_sp(eq, x) >= eq.costs.g(x) - 1e-9
                d = value_sp_prime(eq, x)
                assert -1.0 - 1e-9 <= d <= K + 1e-9
