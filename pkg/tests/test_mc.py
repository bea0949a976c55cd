import math

import numpy as np
import pytest

from levy_saddle import mc, sn, sp
from levy_saddle.errors import ConfigError, DomainError
from levy_saddle.model import phase_survival

from conftest import make_costs, make_model


@pytest.fixture(scope="module")
def eq_uv(rep_uv, default_costs):
    return sn.solve_sn(rep_uv, default_costs)


@pytest.fixture(scope="module")
def eq_sp_uv(rep_sp_uv, default_costs):
    return sp.solve_sp(rep_sp_uv, default_costs)


class TestConfig:
    def test_horizon_invariant(self):
        cfg = mc.SimConfig(horizon=10.0)
        with pytest.raises(ConfigError):
            cfg.resolve_horizon(0.05)
        assert mc.SimConfig().resolve_horizon(0.05) == pytest.approx(
            -math.log(1e-6) / 0.05
        )

    def test_bad_configs(self):
        with pytest.raises(ConfigError):
            mc.SimConfig(n_paths=0).validate()
        with pytest.raises(ConfigError):
            mc.SimConfig(dt=0.0).validate()
        with pytest.raises(ConfigError):
            mc.SimConfig(n_paths=11, antithetic=True).validate()

    def test_preconditions(self, model_sn_uv, default_costs):
        cfg = mc.SimConfig(n_paths=10)
        with pytest.raises(DomainError):
            mc.simulate_cost(model_sn_uv, default_costs, 2.0, 1.0, 1.5, cfg)
        with pytest.raises(DomainError):
            mc.simulate_cost(model_sn_uv, default_costs, 0.0, 1.0, -0.5, cfg)


class TestCostEstimator:
    def test_deterministic_given_seed(self, model_sn_uv, default_costs):
        cfg = mc.SimConfig(n_paths=4000, seed=77)
        e1 = mc.simulate_cost(model_sn_uv, default_costs, 0.0, 2.0, 1.0, cfg)
        e2 = mc.simulate_cost(model_sn_uv, default_costs, 0.0, 2.0, 1.0, cfg)
        assert e1.mean == e2.mean and e1.std_err == e2.std_err
        e3 = mc.simulate_cost(
            model_sn_uv, default_costs, 0.0, 2.0, 1.0, mc.SimConfig(n_paths=4000, seed=78)
        )
        assert e3.mean != e1.mean

    def test_immediate_stop_region(self, model_sn_uv, default_costs):
        cfg = mc.SimConfig(n_paths=100)
        est = mc.simulate_cost(model_sn_uv, default_costs, 0.0, 2.0, 3.0, cfg)
        assert est.mean == pytest.approx(default_costs.g(3.0), abs=1e-12)
        assert est.std_err == 0.0

    def test_huge_discount_sanity(self, jumps):
        model = make_model("SN", sigma=1.0, q=50.0)
        costs = make_costs()
        cfg = mc.SimConfig(n_paths=4000, dt=1e-3, seed=3)
        est = mc.simulate_cost(model, costs, 0.0, 2.0, 1.0, cfg)
        # everything is discounted away almost immediately
        assert abs(est.mean) < 0.25

    def test_matches_closed_form_sn(self, model_sn_uv, rep_uv, default_costs, eq_uv):
        x0 = 0.5 * (eq_uv.a_star + eq_uv.b_star)
        closed = sn.j_ab(rep_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0)
        est = mc.simulate_cost(
            model_sn_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0,
            mc.SimConfig(n_paths=20_000, dt=1e-3, seed=101),
        )
        assert abs(est.mean - closed) <= 4.0 * est.std_err

    def test_matches_closed_form_sp(self, model_sp_uv, rep_sp_uv, default_costs, eq_sp_uv):
        x0 = 0.5 * (eq_sp_uv.a_star + eq_sp_uv.b_star)
        closed = sp.j_ab_sp(rep_sp_uv, default_costs, eq_sp_uv.a_star, eq_sp_uv.b_star, x0)
        est = mc.simulate_cost(
            model_sp_uv, default_costs, eq_sp_uv.a_star, eq_sp_uv.b_star, x0,
            mc.SimConfig(n_paths=20_000, dt=1e-3, seed=202),
        )
        assert abs(est.mean - closed) <= 4.0 * est.std_err

    def test_truncation_bias_reported(self, model_sn_uv, default_costs):
        est = mc.simulate_cost(
            model_sn_uv, default_costs, 0.0, 2.0, 1.0, mc.SimConfig(n_paths=16)
        )
        assert 0.0 < est.truncation_bias_bound < 1e-3

    def test_antithetic_reduces_brownian_noise(self, model_sn_uv):
        # the up-crossing transform is monotone in the Brownian increments, so
        # mirroring them must cut its standard error
        plain = mc.simulate_passage(model_sn_uv, 1.0, 2.0, mc.SimConfig(n_paths=20_000, seed=5))
        anti = mc.simulate_passage(
            model_sn_uv, 1.0, 2.0, mc.SimConfig(n_paths=20_000, seed=5, antithetic=True)
        )
        assert anti.up.std_err <= plain.up.std_err
        assert anti.down.std_err <= plain.down.std_err
        assert anti.up.n_paths == plain.up.n_paths == 20_000

    def test_antithetic_cost_estimate_consistent(self, model_sn_uv, rep_uv, default_costs, eq_uv):
        x0 = 0.5 * (eq_uv.a_star + eq_uv.b_star)
        closed = sn.j_ab(rep_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0)
        anti = mc.simulate_cost(
            model_sn_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0,
            mc.SimConfig(n_paths=20_000, seed=56, antithetic=True),
        )
        assert abs(anti.mean - closed) <= 4.0 * anti.std_err


class TestPassageEstimator:
    def test_started_at_barrier(self, model_sn_bv):
        pe = mc.simulate_passage(model_sn_bv, 2.0, 2.0, mc.SimConfig(n_paths=500))
        assert pe.up.mean == 1.0

    def test_started_at_zero(self, model_sn_bv):
        pe = mc.simulate_passage(model_sn_bv, 0.0, 2.0, mc.SimConfig(n_paths=2000, seed=8))
        assert 0.0 < pe.down.mean < 1.0

    def test_matches_closed_forms_bounded_variation(self, model_sn_bv):
        pe = mc.simulate_passage(
            model_sn_bv, 1.0, 2.0, mc.SimConfig(n_paths=50_000, dt=1e-3, seed=5)
        )
        assert abs(pe.up.mean - pe.up_closed_form) <= 3.0 * pe.up.std_err
        assert (
            abs(pe.down_before_up.mean - pe.down_before_up_closed_form)
            <= 3.0 * pe.down_before_up.std_err
        )
        assert abs(pe.down.mean - pe.down_closed_form) <= 3.0 * pe.down.std_err

    def test_matches_closed_forms_with_diffusion(self, model_sn_uv):
        pe = mc.simulate_passage(
            model_sn_uv, 1.0, 2.0, mc.SimConfig(n_paths=50_000, dt=1e-3, seed=6)
        )
        assert abs(pe.up.mean - pe.up_closed_form) <= 4.0 * pe.up.std_err
        assert abs(pe.down.mean - pe.down_closed_form) <= 4.0 * pe.down.std_err


class TestDtRefinement:
    def test_halving_dt_within_noise(self, model_sn_uv, rep_uv, default_costs, eq_uv):
        x0 = 0.5 * (eq_uv.a_star + eq_uv.b_star)
        base = mc.simulate_cost(
            model_sn_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0,
            mc.SimConfig(n_paths=100_000, dt=1e-3, seed=909),
        )
        fine = mc.simulate_cost(
            model_sn_uv, default_costs, eq_uv.a_star, eq_uv.b_star, x0,
            mc.SimConfig(n_paths=100_000, dt=5e-4, seed=909),
        )
        assert abs(base.mean - fine.mean) <= 1.0 * base.std_err


class TestSamplers:
    def test_phase_type_moments(self, jumps):
        rng = np.random.default_rng(4)
        zs = mc.sample_phase_type(jumps, 100_000, rng)
        assert zs.min() > 0.0
        se = zs.std(ddof=1) / math.sqrt(zs.size)
        assert abs(zs.mean() - jumps.mean()) <= 4.0 * se

    def test_phase_type_tail(self, jumps):
        rng = np.random.default_rng(9)
        zs = mc.sample_phase_type(jumps, 100_000, rng)
        for level in (0.5, 1.0, 2.0):
            emp = (zs > level).mean()
            want = phase_survival(jumps, level)
            se = math.sqrt(want * (1.0 - want) / zs.size)
            assert abs(emp - want) <= 4.0 * se

    def test_increment_moments(self, model_sn_uv, rep_uv):
        rng = np.random.default_rng(123)
        delta_t = 0.05
        xs = mc.sample_increment(model_sn_uv, 0.0, delta_t, 200_000, rng)
        se = xs.std(ddof=1) / math.sqrt(xs.size)
        assert abs(xs.mean() - rep_uv.mu * delta_t) <= 4.0 * se

    def test_increment_side(self, model_sp_uv, rep_sp_uv):
        rng = np.random.default_rng(321)
        xs = mc.sample_increment(model_sp_uv, 0.0, 0.05, 200_000, rng)
        se = xs.std(ddof=1) / math.sqrt(xs.size)
        assert abs(xs.mean() - (-rep_sp_uv.mu) * 0.05) <= 4.0 * se
