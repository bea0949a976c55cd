"""Monte Carlo estimation of barrier-pair costs and first-passage transforms.

This module is the independent check on the closed-form machinery: it never
touches the root representation except to report closed-form comparators next
to the passage estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import simulate_cost_kernel, simulate_passage_kernel
from .costs import GameCosts
from .errors import ConfigError, DomainError
from .model import LevyModelSpec, PhaseTypeDist, Side, phase_tail_cutoff

TRUNCATION_DISCOUNT = 1e-6  # e^{-q horizon} must not exceed this


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float | None = None  # defaults to the truncation bound for q
    seed: int = 20240601
    antithetic: bool = False

    def resolve_horizon(self, q: float) -> float:
        horizon = self.horizon
        if horizon is None:
            horizon = -math.log(TRUNCATION_DISCOUNT) / q
        if math.exp(-q * horizon) > TRUNCATION_DISCOUNT * (1.0 + 1e-12):
            raise ConfigError(
                f"horizon {horizon} leaves discount above {TRUNCATION_DISCOUNT}"
            )
        return horizon

    def validate(self):
        if self.n_paths <= 0:
            raise ConfigError("n_paths must be positive")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")
        if self.antithetic and self.n_paths % 2 != 0:
            raise ConfigError("antithetic pairing needs an even n_paths")


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    std_err: float
    n_paths: int
    truncation_bias_bound: float


@dataclass(frozen=True)
class PassageEstimates:
    up: CostEstimate
    down_before_up: CostEstimate
    down: CostEstimate
    up_closed_form: float
    down_before_up_closed_form: float
    down_closed_form: float


def _chain_arrays(jumps: PhaseTypeDist):
    m = jumps.m
    alpha_cum = np.cumsum(jumps.alpha_vec)
    alpha_cum[-1] = 1.0
    rates = -np.diag(jumps.T).copy()
    probs = np.empty((m, m + 1))
    for i in range(m):
        row = jumps.T[i].copy()
        row[i] = 0.0
        probs[i, :m] = row / rates[i]
        probs[i, m] = jumps.t_vec[i] / rates[i]
    trans_cum = np.cumsum(probs, axis=1)
    trans_cum[:, -1] = 1.0
    return alpha_cum, rates, trans_cum


def _estimate(values: np.ndarray, antithetic: bool, bias_bound: float) -> CostEstimate:
    n = values.size
    if antithetic:
        pair_means = values.reshape(-1, 2).mean(axis=1)
        mean = float(pair_means.mean())
        se = float(pair_means.std(ddof=1) / math.sqrt(pair_means.size))
    else:
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(n))
    return CostEstimate(mean=mean, std_err=se, n_paths=n, truncation_bias_bound=bias_bound)


def _drift_and_sign(model: LevyModelSpec):
    if model.side is Side.SPECTRALLY_POSITIVE:
        return -model.delta, True
    return model.delta, False


def simulate_cost(
    model: LevyModelSpec,
    costs: GameCosts,
    a: float,
    b: float,
    x: float,
    cfg: SimConfig,
) -> CostEstimate:
    """Estimate of the discounted barrier-pair cost started from x."""
    cfg.validate()
    if not a < b:
        raise DomainError("simulate_cost needs a < b")
    if x < a:
        raise DomainError("simulate_cost needs x >= a")
    horizon = cfg.resolve_horizon(model.q)
    drift, is_sp = _drift_and_sign(model)
    alpha_cum, rates, trans_cum = _chain_arrays(model.jumps)
    out = np.empty(cfg.n_paths)
    simulate_cost_kernel(
        np.uint64(cfg.seed),
        cfg.n_paths,
        cfg.antithetic,
        float(x),
        float(a),
        float(b),
        drift,
        model.sigma,
        model.kappa,
        model.q,
        is_sp,
        alpha_cum,
        rates,
        trans_cum,
        -costs.alpha_h,
        costs.beta_h,
        costs.K_g,
        costs.C_g,
        cfg.dt,
        horizon,
        out,
    )
    reach_hi = max(b, x)
    if is_sp:
        reach_hi += phase_tail_cutoff(model.jumps, 1e-12)
    reach_lo = min(a, x)
    sup_h = max(abs(costs.h(reach_lo)), abs(costs.h(reach_hi)))
    sup_g = max(abs(costs.g(reach_lo)), abs(costs.g(reach_hi)))
    bias = math.exp(-model.q * horizon) * (sup_h / model.q + sup_g)
    return _estimate(out, cfg.antithetic, bias)


def simulate_passage(
    model: LevyModelSpec, x: float, b: float, cfg: SimConfig
) -> PassageEstimates:
    """Discounted first-passage transforms of the uncontrolled process.

    Estimates the up-crossing transform of level b (killed at the first
    down-crossing of 0), the complementary down-crossing transform, and the
    unconditional down-crossing transform, with the closed forms alongside.
    """
    cfg.validate()
    if not 0.0 <= x <= b:
        raise DomainError("simulate_passage needs 0 <= x <= b")
    horizon = cfg.resolve_horizon(model.q)
    drift, is_sp = _drift_and_sign(model)
    alpha_cum, rates, trans_cum = _chain_arrays(model.jumps)
    out_up = np.empty(cfg.n_paths)
    out_down_first = np.empty(cfg.n_paths)
    out_down = np.empty(cfg.n_paths)
    simulate_passage_kernel(
        np.uint64(cfg.seed),
        cfg.n_paths,
        cfg.antithetic,
        float(x),
        float(b),
        drift,
        model.sigma,
        model.kappa,
        model.q,
        is_sp,
        alpha_cum,
        rates,
        trans_cum,
        cfg.dt,
        horizon,
        out_up,
        out_down_first,
        out_down,
    )
    bias = math.exp(-model.q * horizon)
    from .scale import down_transform, scale_rep, w, z

    rep = scale_rep(model)
    up_cf = w(rep, x) / w(rep, b)
    down_first_cf = z(rep, x) - z(rep, b) * up_cf
    down_cf = down_transform(rep, x)
    return PassageEstimates(
        up=_estimate(out_up, cfg.antithetic, bias),
        down_before_up=_estimate(out_down_first, cfg.antithetic, bias),
        down=_estimate(out_down, cfg.antithetic, bias),
        up_closed_form=up_cf,
        down_before_up_closed_form=down_first_cf,
        down_closed_form=down_cf,
    )


def sample_phase_type(jumps: PhaseTypeDist, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact phase-type samples via the embedded absorbing chain (NumPy path)."""
    m = jumps.m
    alpha_cum, rates, trans_cum = _chain_arrays(jumps)
    ph = np.searchsorted(alpha_cum, rng.random(n), side="left").clip(0, m - 1)
    out = np.zeros(n)
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        r = rates[ph[idx]]
        out[idx] += rng.exponential(1.0, size=idx.size) / r
        u = rng.random(idx.size)
        nxt = (trans_cum[ph[idx]] < u[:, None]).sum(axis=1)
        exited = nxt >= m
        active[idx[exited]] = False
        stay = ~exited
        ph[idx[stay]] = nxt[stay]
    return out


def sample_increment(
    model: LevyModelSpec, x: float, delta_t: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Exact samples of the process at a fixed small time, for generator checks."""
    drift, is_sp = _drift_and_sign(model)
    vals = np.full(n, x + drift * delta_t)
    if model.sigma > 0.0:
        vals += model.sigma * math.sqrt(delta_t) * rng.standard_normal(n)
    counts = rng.poisson(model.kappa * delta_t, size=n)
    total = int(counts.sum())
    if total > 0:
        sizes = sample_phase_type(model.jumps, total, rng)
        sums = np.zeros(n)
        np.add.at(sums, np.repeat(np.arange(n), counts), sizes)
        vals += sums if is_sp else -sums
    return vals
