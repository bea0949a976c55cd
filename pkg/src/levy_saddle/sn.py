"""Solver for the spectrally negative game.

The stopping boundary b and reflection boundary a are pinned by two nested
monotone root-finding problems: for fixed a, ``small_lambda(a, .)`` starts at
1 + K and decreases to -infinity, so its zero ``b_tilde(a)`` is found by
bisection; ``big_lambda(a, b_tilde(a))`` is then increasing in a and its zero
gives the reflection boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.integrate import quad

from .bracketing import bisect, grow_down, grow_up
from .costs import Affine, GameCosts
from .errors import AssumptionError, DomainError, ToleranceNotMet
from .scale import ScaleFunctionRep, w, w_bar, w_bar2, w_mom1, z, z_bar


def phi_a(rep: ScaleFunctionRep, a: float, x: float, h) -> float:
    """Convolution integral_a^x W(x-y) h(y) dy; zero whenever x <= a.

    Affine ``h`` closes termwise against the exponential sum; any other
    callable falls back to adaptive quadrature.
    """
    if x <= a:
        return 0.0
    v = x - a
    if isinstance(h, Affine):
        return h(x) * w_bar(rep, v) - h.slope * w_mom1(rep, v)
    val, _ = quad(lambda y: w(rep, x - y) * h(y), a, x, limit=200)
    return val


def ell(rep: ScaleFunctionRep, mu: float, x: float) -> float:
    """Reflection cost kernel: Zbar(x) + mu/q - Z(x)/Phi(q)."""
    return z_bar(rep, x) + mu / rep.q - z(rep, x) / rep.roots.phi_q


def big_lambda(rep: ScaleFunctionRep, costs, a: float, b: float) -> float:
    """Boundary functional whose zero (jointly with small_lambda) pins (a*, b*).

    Evaluated through the tilted running cost, which avoids the h(a)/q * Z
    cancellation of the direct form; see big_lambda_direct for the latter.
    """
    q = rep.q
    if isinstance(costs, GameCosts):
        ht = costs.h_tilde(q)
        conv = ht.slope * w_bar2(rep, b - a)
        ht_a = ht(a)
    else:
        ht_fn = lambda y: costs.h_fn(y) + q * y
        ht_a = ht_fn(a)
        conv, _ = quad(lambda y: w(rep, b - y) * (ht_fn(y) - ht_a), a, b, limit=200)
    return conv + b + rep.mu / q - ht_a / q + costs.g(b)


def big_lambda_direct(rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float) -> float:
    """Direct form of big_lambda, kept as a cross-check of the tilted form."""
    q = rep.q
    v = b - a
    return (
        phi_a(rep, a, b, costs.h)
        + z_bar(rep, v)
        + rep.mu / q
        + costs.g(b)
        - costs.h(a) / q * z(rep, v)
    )


def small_lambda(rep: ScaleFunctionRep, costs, a: float, b: float) -> float:
    """d big_lambda / d b: equals (q - alpha_h) Wbar(b-a) + K + 1 for affine h."""
    if isinstance(costs, GameCosts):
        return (rep.q - costs.alpha_h) * w_bar(rep, b - a) + costs.K_g + 1.0
    conv, _ = quad(
        lambda y: w(rep, b - y) * (costs.h_prime_fn(y) + rep.q), a, b, limit=200
    )
    return conv + costs.K_g + 1.0


@dataclass(frozen=True)
class SnEquilibrium:
    a_star: float
    b_star: float
    a_bar: float
    rep: ScaleFunctionRep
    costs: GameCosts
    residual_big: float
    residual_small: float


def _lambda_scale(rep: ScaleFunctionRep, costs, a: float, b: float) -> float:
    # mixed magnitudes across parameter sweeps; normalize against the largest term
    q = rep.q
    if isinstance(costs, GameCosts):
        ht = costs.h_tilde(q)
        conv = abs(ht.slope * w_bar2(rep, b - a))
        ht_a = ht(a)
    else:
        ht_a = costs.h_fn(a) + q * a
        conv = 0.0
    terms = (conv, abs(b), abs(rep.mu / q), abs(ht_a / q), abs(costs.g(b)))
    return 1.0 + max(terms)


def solve_sn(
    rep: ScaleFunctionRep,
    costs,
    xtol: float = 1e-10,
    maxiter: int = 200,
    residual_tol: float = 1e-8,
) -> SnEquilibrium:
    """Find the reflection/stopping pair (a*, b*) and validate the fixed point."""
    q = rep.q
    if isinstance(costs, GameCosts):
        if not costs.alpha_h > q:
            raise AssumptionError("spectrally negative game needs running-cost slope alpha > q")
        denom = 1.0 + costs.K_g + (costs.alpha_h - q) / q
        a_bar = (costs.beta_h / q - rep.mu / q - costs.C_g) / denom
    else:
        # diagonal start value is increasing in a; locate its zero numerically
        diag = lambda a: rep.mu / q - (costs.h_fn(a) + q * a) / q + costs.g(a)
        if diag(0.0) >= 0.0:
            lo, hi, f_lo, f_hi = grow_down(diag, 0.0, want_negative=True)
        else:
            lo, hi, f_lo, f_hi = grow_up(diag, 0.0, want_negative=False)
        a_bar = bisect(diag, lo, hi, f_lo, f_hi, xtol=xtol, maxiter=maxiter)

    def lam(a: float, b: float) -> float:
        return small_lambda(rep, costs, a, b)

    def b_tilde(a: float) -> float:
        f = lambda b: lam(a, b)
        lo, hi, f_lo, f_hi = grow_up(f, a, want_negative=True)
        return bisect(f, lo, hi, f_lo, f_hi, xtol=xtol, maxiter=maxiter)

    def outer(a: float) -> float:
        return big_lambda(rep, costs, a, b_tilde(a))

    f_hi = outer(a_bar)
    if f_hi <= 0.0:
        # theoretically > 0; tolerate a vanishing residual as "already solved"
        if f_hi < -residual_tol * _lambda_scale(rep, costs, a_bar, b_tilde(a_bar)):
            raise ToleranceNotMet("big_lambda(a_bar, b_tilde(a_bar)) is not positive")
        a_star = a_bar
    else:
        lo, hi, f_lo, f_hi = grow_down(outer, a_bar, want_negative=True)
        a_star = bisect(outer, lo, hi, f_lo, f_hi, xtol=xtol, maxiter=maxiter)

    b_star = b_tilde(a_star)
    res_big = big_lambda(rep, costs, a_star, b_star)
    res_small = small_lambda(rep, costs, a_star, b_star)

    scale = _lambda_scale(rep, costs, a_star, b_star)
    if abs(res_big) > residual_tol * scale or abs(res_small) > residual_tol:
        raise ToleranceNotMet(
            f"equilibrium residuals too large: big={res_big:.3e} small={res_small:.3e}"
        )
    if not (a_star < a_bar + xtol and a_star < b_star):
        raise ToleranceNotMet("solved boundaries violate a* < a_bar, a* < b*")

    _check_shape(rep, costs, a_star, b_star, residual_tol)
    return SnEquilibrium(
        a_star=a_star,
        b_star=b_star,
        a_bar=a_bar,
        rep=rep,
        costs=costs,
        residual_big=res_big,
        residual_small=res_small,
    )


def _check_shape(rep, costs, a_star, b_star, residual_tol):
    # sign pattern of the boundary functionals at the solved point, coarse grid
    slack = 10.0 * residual_tol
    width = b_star - a_star
    for i in range(1, 20):
        x = a_star + width * i / 20.0
        if small_lambda(rep, costs, a_star, x) < -slack:
            raise ToleranceNotMet("small_lambda should be nonnegative left of b*")
    for i in range(1, 21):
        x = b_star + 5.0 * i / 20.0
        if small_lambda(rep, costs, a_star, x) > slack:
            raise ToleranceNotMet("small_lambda should be nonpositive right of b*")
        if big_lambda(rep, costs, a_star, x) > slack * _lambda_scale(rep, costs, a_star, x):
            raise ToleranceNotMet("big_lambda(a*, .) should stay nonpositive")


def j_ab(rep: ScaleFunctionRep, costs, a: float, b: float, x: float) -> float:
    """Expected discounted cost of the barrier pair (a, b) started from x."""
    if not a < b:
        raise DomainError("j_ab needs a < b")
    h = costs.h if isinstance(costs, GameCosts) else costs.h_fn
    if x > b:
        return costs.g(x)
    if x < a:
        return (a - x) + j_ab(rep, costs, a, b, a)
    vb = b - a
    core = phi_a(rep, a, b, h) + ell(rep, rep.mu, vb) + costs.g(b)
    return (
        z(rep, x - a) / z(rep, vb) * core
        - phi_a(rep, a, x, h)
        - ell(rep, rep.mu, x - a)
    )


def value_sn(eq: SnEquilibrium, x: float) -> float:
    """Game value at equilibrium; equals g above b* and is affine below a*."""
    if x > eq.b_star:
        return eq.costs.g(x)
    rep, costs = eq.rep, eq.costs
    h = costs.h if isinstance(costs, GameCosts) else costs.h_fn
    v = x - eq.a_star
    return (
        z(rep, v) * h(eq.a_star) / rep.q
        - z_bar(rep, v)
        - rep.mu / rep.q
        - phi_a(rep, eq.a_star, x, h)
    )


def value_sn_prime(eq: SnEquilibrium, x: float) -> float:
    """Derivative of the value function (C^1 across both boundaries)."""
    if x <= eq.a_star:
        return -1.0
    if x >= eq.b_star:
        return eq.costs.K_g
    return eq.costs.K_g - small_lambda(eq.rep, eq.costs, eq.a_star, x)
