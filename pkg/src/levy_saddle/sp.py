"""Solver for the spectrally positive game (scale functions of the dual process).

Three regimes exist: the controller may never act (a* = -infinity, when the
discount rate beats the running-cost slope), the boundaries may be separated
(a* < b*), or - only on bounded-variation paths with scarce jumps - the two
boundaries collapse to a single point B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .bracketing import bisect
from .costs import GameCosts
from .errors import AssumptionError, DomainError, NoBracket, ToleranceNotMet
from .scale import (
    ScaleFunctionRep,
    w,
    w_bar,
    w_bar_gap,
    w_gap_prime,
    w_mom1,
    w_prime,
    z,
    z_bar,
)


class SpCase(Enum):
    NO_CONTROL = "no_control"
    INTERIOR = "interior"
    COLLAPSED = "collapsed"


@dataclass(frozen=True)
class SpCostDerived:
    """Affine reduction h_hat(x) = -alpha_hat x + intercept of the running cost.

    alpha_hat = alpha_h + K q must be positive for the stopper's boundary
    equations to have finite solutions.
    """

    alpha_hat: float
    intercept: float
    mu_hat: float

    @classmethod
    def from_costs(cls, costs: GameCosts, rep: ScaleFunctionRep) -> "SpCostDerived":
        mu_hat = rep.mu
        alpha_hat = costs.alpha_h + costs.K_g * rep.q
        if not alpha_hat > 0.0:
            raise AssumptionError("spectrally positive game needs alpha + K q > 0")
        intercept = costs.beta_h - costs.C_g * rep.q - costs.K_g * mu_hat
        return cls(alpha_hat=alpha_hat, intercept=intercept, mu_hat=mu_hat)

    def h_hat(self, x: float) -> float:
        return -self.alpha_hat * x + self.intercept


@dataclass(frozen=True)
class SpThresholds:
    b_under: float
    b_over: float
    B: float  # NaN when the path has a diffusion part


def thresholds(costs: GameCosts, rep: ScaleFunctionRep) -> SpThresholds:
    """Zeros of h_hat, of Phi*h_hat + alpha_hat, and of h_hat + delta(1+K)."""
    d = SpCostDerived.from_costs(costs, rep)
    phi = rep.roots.phi_q
    b_under = d.intercept / d.alpha_hat
    b_over = b_under + 1.0 / phi
    if rep.model.sigma == 0.0:
        B = (d.intercept + rep.model.delta * (1.0 + costs.K_g)) / d.alpha_hat
    else:
        B = math.nan
    return SpThresholds(b_under=b_under, b_over=b_over, B=B)


def upsilon_at_B(costs: GameCosts, rep: ScaleFunctionRep) -> float:
    """(q + kappa)(1 + K) - alpha_hat; its sign separates collapsed equilibria."""
    if rep.model.sigma > 0.0:
        raise DomainError("upsilon_at_B is defined for bounded-variation paths only")
    d = SpCostDerived.from_costs(costs, rep)
    return (rep.q + rep.model.kappa) * (1.0 + costs.K_g) - d.alpha_hat


def _c_b(rep: ScaleFunctionRep, d: SpCostDerived, b: float) -> float:
    # h_hat(b) + alpha_hat/Phi: vanishes exactly at b_over
    return d.h_hat(b) + d.alpha_hat / rep.roots.phi_q


def gamma_cap(rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float) -> float:
    """Stopper-boundary functional 1 + K + W(b-a) h_hat(b) + alpha_hat Wbar(b-a).

    Grouped so that the exponentially growing parts cancel analytically: the
    a -> -infinity limit is finite at b = b_over and the evaluation stays
    stable for large b - a.
    """
    if not a <= b:
        raise DomainError("gamma_cap needs a <= b")
    d = SpCostDerived.from_costs(costs, rep)
    if math.isinf(a):
        cb = _c_b(rep, d, b)
        limit = 1.0 + costs.K_g + d.alpha_hat * _gap_limit(rep)
        if abs(cb) <= 1e-9 * d.alpha_hat:
            return limit
        return math.inf if cb > 0.0 else -math.inf
    v = b - a
    cb = _c_b(rep, d, b)
    wv = w(rep, v)
    if math.isinf(wv) and cb != 0.0:
        return math.copysign(math.inf, cb)
    return 1.0 + costs.K_g + d.alpha_hat * w_bar_gap(rep, v) + wv * cb


def _gap_limit(rep: ScaleFunctionRep) -> float:
    # limit of Wbar(x) - W(x)/Phi as x -> infinity; equals -1/q up to root accuracy
    return -float(np.sum(rep._A / rep._r).real)


def gamma_cap_raw(rep: ScaleFunctionRep, costs: GameCosts, x: float, b: float) -> float:
    """Defining form of gamma_cap, with the W' convolution done by quadrature."""
    if not x <= b:
        raise DomainError("gamma_cap_raw needs x <= b")
    d = SpCostDerived.from_costs(costs, rep)
    conv, _ = quad(lambda y: costs.h(y) * w_prime(rep, y - x), x, b, limit=200)
    v = b - x
    return (
        1.0
        + w(rep, 0.0) * costs.h(x)
        + conv
        - ((costs.C_g + b * costs.K_g) * rep.q + costs.K_g * d.mu_hat) * w(rep, v)
        + costs.K_g * z(rep, v)
    )


def gamma_low(rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float) -> float:
    """d gamma_cap / d a = -W'(b-a) h_hat(b) - alpha_hat W(b-a).

    Accepts a = b, returning the a -> b- limit (used for bracket dispatch).
    """
    if not a <= b:
        raise DomainError("gamma_low needs a <= b")
    d = SpCostDerived.from_costs(costs, rep)
    v = b - a
    cb = _c_b(rep, d, b)
    gap = w_gap_prime(rep, v)
    wp = w_prime(rep, v)
    if math.isinf(wp):
        if cb != 0.0:
            return -math.copysign(math.inf, cb)
        return -d.alpha_hat * gap
    return -wp * cb - d.alpha_hat * gap


@dataclass(frozen=True)
class SpEquilibrium:
    case_tag: SpCase
    a_star: float  # -inf in the no-control case
    b_star: float
    b_under: float
    b_over: float
    B: float  # NaN when sigma > 0
    rep: ScaleFunctionRep
    costs: GameCosts
    derived: SpCostDerived
    residual_cap: float
    residual_low: float


def _a_bar_of_b(rep, costs, d, b, xtol, maxiter):
    """Location of the single sign change of gamma_low(., b); -inf if none."""
    f = lambda a: gamma_low(rep, costs, a, b)
    f_end = f(b)
    if f_end <= 0.0:
        return b
    span_max = 1e3 * (1.0 + 1.0 / rep.roots.phi_q)
    span = 1.0
    lo = b - span
    f_lo = f(lo)
    while f_lo > 0.0:
        span *= 2.0
        if span > span_max:
            return -math.inf
        lo = b - span
        f_lo = f(lo)
    return bisect(f, lo, b, f_lo, f_end, xtol=xtol, maxiter=maxiter)


def solve_sp(
    rep: ScaleFunctionRep,
    costs: GameCosts,
    xtol: float = 1e-10,
    maxiter: int = 200,
    residual_tol: float = 1e-8,
) -> SpEquilibrium:
    """Dispatch the three regimes and locate the boundary pair."""
    d = SpCostDerived.from_costs(costs, rep)
    th = thresholds(costs, rep)
    sigma = rep.model.sigma
    q = rep.q

    def build(case, a_star, b_star):
        if math.isinf(a_star):
            res_cap = gamma_cap(rep, costs, a_star, b_star) - (1.0 - costs.alpha_h / q)
            res_low = 0.0
        elif case is SpCase.COLLAPSED:
            res_cap = gamma_cap(rep, costs, a_star, b_star)
            res_low = 0.0
        else:
            res_cap = gamma_cap(rep, costs, a_star, b_star)
            res_low = gamma_low(rep, costs, a_star, b_star)
        return SpEquilibrium(
            case_tag=case,
            a_star=a_star,
            b_star=b_star,
            b_under=th.b_under,
            b_over=th.b_over,
            B=th.B,
            rep=rep,
            costs=costs,
            derived=d,
            residual_cap=res_cap,
            residual_low=res_low,
        )

    if q >= costs.alpha_h:
        return build(SpCase.NO_CONTROL, -math.inf, th.b_over)

    if sigma == 0.0 and upsilon_at_B(costs, rep) <= 0.0:
        eq = build(SpCase.COLLAPSED, th.B, th.B)
        if abs(eq.residual_cap) > residual_tol:
            raise ToleranceNotMet("collapsed-case residual gamma_cap(B, B) too large")
        return eq

    # interior: sweep b upward from b_under for the first zero of
    # F(b) = gamma_cap(a_bar(b), b), then bisect inside the bracket
    def F(b: float) -> float:
        a = _a_bar_of_b(rep, costs, d, b, xtol, maxiter)
        return gamma_cap(rep, costs, a, b)

    lo_b, hi_b = th.b_under, th.b_over
    step = (hi_b - lo_b) / 64.0
    bracket = None
    for _ in range(6):
        prev_b, prev_f = lo_b, F(lo_b)
        bb = lo_b
        while bb < hi_b - 1e-14:
            bb = min(bb + step, hi_b)
            fb = F(bb)
            if prev_f > 0.0 >= fb:
                bracket = (prev_b, bb, prev_f, fb)
                break
            prev_b, prev_f = bb, fb
        if bracket is not None:
            break
        step /= 4.0
    if bracket is None:
        raise NoBracket("no zero of gamma_cap(a_bar(b), b) found on (b_under, b_over)")

    b_star = bisect(F, *bracket, xtol=xtol, maxiter=maxiter)
    a_star = _a_bar_of_b(rep, costs, d, b_star, xtol, maxiter)
    eq = build(SpCase.INTERIOR, a_star, b_star)

    scale = 1.0 + abs(d.alpha_hat * w_bar_gap(rep, b_star - a_star)) + abs(
        w(rep, b_star - a_star) * _c_b(rep, d, b_star)
    )
    if abs(eq.residual_cap) > residual_tol * scale or abs(eq.residual_low) > residual_tol * scale:
        raise ToleranceNotMet(
            f"interior residuals too large: cap={eq.residual_cap:.3e} low={eq.residual_low:.3e}"
        )
    if not th.b_under < b_star:
        raise ToleranceNotMet("interior solution must satisfy b_under < b*")
    if sigma == 0.0 and not b_star < th.B:
        raise ToleranceNotMet("bounded-variation interior solution must satisfy b* < B")
    return eq


def gamma_bar(rep: ScaleFunctionRep, costs: GameCosts, x: float, b: float) -> float:
    """Antiderivative companion of gamma_cap; affine continuation above b."""
    d = SpCostDerived.from_costs(costs, rep)
    if x >= b:
        return x * (1.0 + costs.K_g) + costs.C_g - b
    v = b - x
    # integral_x^b h(y) W(y-x) dy with h evaluated at x + u, u = y - x
    conv = costs.h(x) * w_bar(rep, v) + costs.h.slope * w_mom1(rep, v)
    return (
        x
        - b
        - conv
        + (costs.C_g + b * costs.K_g) * z(rep, v)
        - costs.K_g * z_bar(rep, v)
        + costs.K_g * d.mu_hat * w_bar(rep, v)
    )


def j_ab_sp(rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float, x: float) -> float:
    """Expected discounted cost of the barrier pair (a, b) started from x."""
    if not a < b:
        raise DomainError("j_ab_sp needs a < b")
    cap = gamma_cap(rep, costs, a, b)
    wp = w_prime(rep, b - a)
    if x <= a:
        return w(rep, b - a) / wp * cap + gamma_bar(rep, costs, a, b) - x + b
    return w(rep, b - x) / wp * cap + gamma_bar(rep, costs, x, b) - x + b


def value_sp(eq: SpEquilibrium, x: float) -> float:
    """Game value at equilibrium; linear with slope -1 below a*, g above b*."""
    a = eq.a_star
    if not math.isinf(a) and x < a:
        return (a - x) + value_sp(eq, a)
    return gamma_bar(eq.rep, eq.costs, x, eq.b_star) - x + eq.b_star


def value_sp_prime(eq: SpEquilibrium, x: float) -> float:
    """Derivative of the value function.

    At the stopping boundary the right derivative K is returned; on
    bounded-variation paths the left derivative differs (continuous fit only).
    """
    if x >= eq.b_star:
        return eq.costs.K_g
    if x <= eq.a_star:
        return -1.0
    return gamma_cap(eq.rep, eq.costs, x, eq.b_star) - 1.0


def value_sp_second(eq: SpEquilibrium, x: float) -> float:
    """Second derivative on the continuation region; zero on the affine pieces."""
    if x >= eq.b_star or x <= eq.a_star:
        return 0.0
    return gamma_low(eq.rep, eq.costs, x, eq.b_star)
