"""Numerical certification of a solved equilibrium.

The integro-differential generator is applied by quadrature against the
phase-type jump density, and the solution is checked against the variational
inequalities, the boundary fit classes, convexity/derivative bounds, and the
barrier-restricted saddle property.  Everything is deterministic given the
grids and quadrature tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from . import sn, sp
from .costs import GameCosts
from .errors import KinkTooClose
from .model import LevyModelSpec, Side, phase_density, phase_tail_cutoff
from .scale import ScaleFunctionRep, w, w_bar, w_prime, w_second, z

_FD_STEP = 1e-5  # central-difference step for plain-callable evaluators


@dataclass(frozen=True)
class ValueEvaluator:
    """Piecewise value function with one-sided analytic derivatives.

    ``kinks`` lists points where the analytic form changes (quadrature is
    split there); ``derivative_jumps`` the subset where v' itself jumps.
    """

    value: Callable[[float], float]
    deriv1: Callable[[float], float]
    deriv2: Callable[[float], float]
    kinks: tuple
    derivative_jumps: tuple = ()


def wrap_callable(fn: Callable[[float], float]) -> ValueEvaluator:
    """Finite-difference evaluator for a plain smooth test function."""

    def d1(x):
        return (fn(x + _FD_STEP) - fn(x - _FD_STEP)) / (2.0 * _FD_STEP)

    def d2(x):
        return (fn(x + _FD_STEP) - 2.0 * fn(x) + fn(x - _FD_STEP)) / _FD_STEP**2

    return ValueEvaluator(value=fn, deriv1=d1, deriv2=d2, kinks=())


def sn_value_evaluator(
    rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float
) -> ValueEvaluator:
    """J_{a,b} for an arbitrary SN barrier pair (not only the solved one)."""
    lam_ab = sn.big_lambda(rep, costs, a, b)
    zb = z(rep, b - a)
    q = rep.q

    def value(x):
        return sn.j_ab(rep, costs, a, b, x)

    def deriv1(x):
        if x < a:
            return -1.0
        if x >= b:
            return costs.K_g
        # phi_a(x; h') = -alpha_h * Wbar(x - a) for the affine running cost
        return (
            q * w(rep, x - a) * lam_ab / zb
            + costs.alpha_h * w_bar(rep, x - a)
            - z(rep, x - a)
        )

    def deriv2(x):
        if x < a or x >= b:
            return 0.0
        return q * w_prime(rep, x - a) * lam_ab / zb - w(rep, x - a) * (q - costs.alpha_h)

    return ValueEvaluator(value=value, deriv1=deriv1, deriv2=deriv2, kinks=(a, b))


def sp_value_evaluator(
    rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float
) -> ValueEvaluator:
    """J_{a,b} for an SP barrier pair; ``a`` may be -inf (no reflection)."""
    if not math.isinf(a) and a == b:
        g_at = costs.g(b)

        def value(x):
            return costs.g(x) if x >= b else g_at + (b - x)

        return ValueEvaluator(
            value=value,
            deriv1=lambda x: costs.K_g if x >= b else -1.0,
            deriv2=lambda x: 0.0,
            kinks=(b,),
            derivative_jumps=(b,),
        )

    cap = 0.0 if math.isinf(a) else sp.gamma_cap(rep, costs, a, b)
    wp_ab = math.inf if math.isinf(a) else w_prime(rep, b - a)
    ratio = 0.0 if math.isinf(a) else cap / wp_ab

    def value(x):
        if math.isinf(a):
            return sp.gamma_bar(rep, costs, x, b) - x + b
        return sp.j_ab_sp(rep, costs, a, b, x)

    def deriv1(x):
        if x < a:
            return -1.0
        if x >= b:
            return costs.K_g
        return -w_prime(rep, b - x) * ratio + sp.gamma_cap(rep, costs, x, b) - 1.0

    def deriv2(x):
        if x < a or x >= b:
            return 0.0
        return w_second(rep, b - x) * ratio + sp.gamma_low(rep, costs, x, b)

    jumps = (b,) if rep.model.sigma == 0.0 else ()
    kinks = (b,) if math.isinf(a) else (a, b)
    return ValueEvaluator(value=value, deriv1=deriv1, deriv2=deriv2, kinks=kinks, derivative_jumps=jumps)


def generator_apply(
    model: LevyModelSpec,
    v,
    x: float,
    quad_abs_tol: float = 1e-9,
) -> float:
    """(L v)(x) for the side's generator, jump integral by adaptive quadrature."""
    if not isinstance(v, ValueEvaluator):
        v = wrap_callable(v)
    spectrally_positive = model.side is Side.SPECTRALLY_POSITIVE
    if spectrally_positive and model.sigma == 0.0:
        for k in v.derivative_jumps:
            if abs(x - k) < 1e-6:
                raise KinkTooClose(f"generator undefined within 1e-6 of the kink at {k}")

    drift = -model.delta if spectrally_positive else model.delta
    out = drift * v.deriv1(x)
    if model.sigma > 0.0:
        out += 0.5 * model.sigma**2 * v.deriv2(x)

    z_max = phase_tail_cutoff(model.jumps, 1e-12)
    v_x = v.value(x)
    if spectrally_positive:
        integrand = lambda zz: (v.value(x + zz) - v_x) * phase_density(model.jumps, zz)
        breakpoints = sorted(k - x for k in v.kinks if 0.0 < k - x < z_max)
    else:
        integrand = lambda zz: (v.value(x - zz) - v_x) * phase_density(model.jumps, zz)
        breakpoints = sorted(x - k for k in v.kinks if 0.0 < x - k < z_max)
    jump_int, _ = quad(
        integrand,
        0.0,
        z_max,
        points=breakpoints or None,
        epsabs=quad_abs_tol,
        epsrel=1e-10,
        limit=400,
    )
    return out + model.kappa * jump_int


def vi_residual(model: LevyModelSpec, costs: GameCosts, v, x: float) -> float:
    """(L - q) v(x) + h(x)."""
    vv = v if isinstance(v, ValueEvaluator) else wrap_callable(v)
    return generator_apply(model, vv, x) - model.q * vv.value(x) + costs.h(x)


@dataclass
class RegionCheck:
    name: str
    grid: list
    residuals: list
    worst: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "n_points": len(self.grid),
            "worst": self.worst,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class ViReport:
    below_a: RegionCheck | None
    continuation: RegionCheck | None
    above_b: RegionCheck | None
    below_slope_max: float | None
    fit_gaps: dict
    fit_passed: bool
    convexity_min: float
    convexity_passed: bool
    deriv_min: float
    deriv_max: float
    value_minus_g_min: float
    bounds_passed: bool
    saddle: dict | None

    @property
    def passed(self) -> bool:
        checks = [self.fit_passed, self.convexity_passed, self.bounds_passed]
        for region in (self.below_a, self.continuation, self.above_b):
            if region is not None:
                checks.append(region.passed)
        if self.saddle is not None:
            checks.append(self.saddle["passed"])
        return all(checks)

    @property
    def failures(self) -> list:
        out = []
        for region in (self.below_a, self.continuation, self.above_b):
            if region is not None and not region.passed:
                out.append(f"variational inequality in region '{region.name}'")
        if not self.fit_passed:
            out.append("boundary fit")
        if not self.convexity_passed:
            out.append("convexity")
        if not self.bounds_passed:
            out.append("derivative/value bounds")
        if self.saddle is not None and not self.saddle["passed"]:
            out.append("barrier-restricted saddle grid")
        return out

    def to_dict(self):
        return {
            "passed": self.passed,
            "failures": self.failures,
            "regions": {
                name: (region.to_dict() if region is not None else None)
                for name, region in (
                    ("below_a", self.below_a),
                    ("continuation", self.continuation),
                    ("above_b", self.above_b),
                )
            },
            "below_slope_max": self.below_slope_max,
            "fit_gaps": self.fit_gaps,
            "fit_passed": self.fit_passed,
            "convexity_min": self.convexity_min,
            "convexity_passed": self.convexity_passed,
            "derivative_range": [self.deriv_min, self.deriv_max],
            "value_minus_g_min": self.value_minus_g_min,
            "bounds_passed": self.bounds_passed,
            "saddle": self.saddle,
        }


@dataclass(frozen=True)
class ViGrid:
    n_per_region: int = 50
    region_span: float = 3.0
    edge_offset: float = 1e-3
    sign_tol: float = 1e-6
    continuation_tol: float = 1e-5  # scaled by 1 + max |h| on the grid


def _region_grids(a: float, b: float, side_has_reflection: bool, grid: ViGrid):
    n, span, off = grid.n_per_region, grid.region_span, grid.edge_offset
    below = None
    margin = off * (max(1.0, b - a) if side_has_reflection else 1.0)
    if side_has_reflection:
        below = np.linspace(a - span, a - off, n)
    if not side_has_reflection:
        cont = np.linspace(b - 4.0 * span, b - margin, n)
    elif b - a > 2.0 * margin:
        cont = np.linspace(a + margin, b - margin, n)
    else:
        cont = None
    above = np.linspace(b + off, b + span, n)
    return below, cont, above


def check_vi(
    model: LevyModelSpec,
    costs: GameCosts,
    v: ValueEvaluator,
    a: float,
    b: float,
    grid: ViGrid = ViGrid(),
):
    """Residual sign checks of (L - q)v + h over the three regions."""
    has_reflection = not math.isinf(a)
    below_x, cont_x, above_x = _region_grids(a, b, has_reflection, grid)

    below = slope_max = None
    if below_x is not None:
        res = [vi_residual(model, costs, v, float(x)) for x in below_x]
        worst = min(res)
        ok = worst >= -grid.sign_tol
        if model.side is Side.SPECTRALLY_NEGATIVE and len(res) >= 2:
            # residual slope below the reflection barrier is the tilted
            # running-cost slope, which the standing assumptions keep negative
            diffs = np.diff(res) / np.diff(below_x)
            slope_max = float(diffs.max())
            ok = ok and slope_max <= grid.sign_tol
        below = RegionCheck(
            name="below_a",
            grid=list(map(float, below_x)),
            residuals=res,
            worst=worst,
            tolerance=-grid.sign_tol,
            passed=ok,
        )

    continuation = None
    if cont_x is not None:
        hs = max(abs(costs.h(float(x))) for x in cont_x)
        tol = grid.continuation_tol * (1.0 + hs)
        res = [vi_residual(model, costs, v, float(x)) for x in cont_x]
        worst = max(abs(r) for r in res)
        continuation = RegionCheck(
            name="continuation",
            grid=list(map(float, cont_x)),
            residuals=res,
            worst=worst,
            tolerance=tol,
            passed=worst <= tol,
        )

    res = [vi_residual(model, costs, v, float(x)) for x in above_x]
    worst = max(res)
    above = RegionCheck(
        name="above_b",
        grid=list(map(float, above_x)),
        residuals=res,
        worst=worst,
        tolerance=grid.sign_tol,
        passed=worst <= grid.sign_tol,
    )
    return below, continuation, above, slope_max


def check_fit(
    model: LevyModelSpec,
    costs: GameCosts,
    v: ValueEvaluator,
    a: float,
    b: float,
    collapsed: bool = False,
    tol: float = 1e-5,
):
    """One-sided gaps at the boundaries against the required smoothness class.

    SN: C^1 at a (C^2 with diffusion), C^1 at b.
    SP: C^2 at a; C^0 at b on bounded variation, else C^1.  Collapsed pairs
    require continuity at the single boundary only.
    """
    gaps: dict = {}
    eps = 1e-12  # shifts resolve the branch only; smooth variation is O(eps)
    sigma = model.sigma
    sn_side = model.side is Side.SPECTRALLY_NEGATIVE

    def one_sided(x0):
        return {
            "value": v.value(x0 + eps) - v.value(x0 - eps),
            "deriv1": v.deriv1(x0 + eps) - v.deriv1(x0 - eps),
            "deriv2": v.deriv2(x0 + eps) - v.deriv2(x0 - eps),
        }

    required_b = 0 if (not sn_side and sigma == 0.0) else 1
    if collapsed:
        gaps["b_star"] = {"gaps": one_sided(b), "required_class": 0}
    else:
        if not math.isinf(a):
            required_a = 2 if (sigma > 0.0 or not sn_side) else 1
            gaps["a_star"] = {"gaps": one_sided(a), "required_class": required_a}
        gaps["b_star"] = {"gaps": one_sided(b), "required_class": required_b}

    passed = True
    for info in gaps.values():
        g = info["gaps"]
        klass = info["required_class"]
        checks = [abs(g["value"])]
        if klass >= 1:
            checks.append(abs(g["deriv1"]))
        if klass >= 2:
            checks.append(abs(g["deriv2"]))
        info["passed"] = all(c <= tol for c in checks)
        passed = passed and info["passed"]
    return gaps, passed


def check_convexity_and_bounds(
    costs: GameCosts, v: ValueEvaluator, a: float, b: float, n: int = 400
):
    lo = b - 8.0 if math.isinf(a) else a - 2.0
    grid = np.linspace(lo, b + 2.0, n)
    vals = np.array([v.value(float(x)) for x in grid])
    second = vals[:-2] - 2.0 * vals[1:-1] + vals[2:]
    d1 = np.array([v.deriv1(float(x)) for x in grid])
    v_minus_g = vals - np.array([costs.g(float(x)) for x in grid])
    return {
        "convexity_min": float(second.min()),
        "deriv_min": float(d1.min()),
        "deriv_max": float(d1.max()),
        "value_minus_g_min": float(v_minus_g.min()),
    }


def check_saddle_grid(
    rep: ScaleFunctionRep,
    costs: GameCosts,
    side: Side,
    a_star: float,
    b_star: float,
    x_list: Sequence[float],
    a_grid: np.ndarray,
    b_grid: np.ndarray,
) -> dict:
    """Grid confirmation that (a*, b*) is a saddle among barrier strategies."""
    cost_of = sn.j_ab if side is Side.SPECTRALLY_NEGATIVE else sp.j_ab_sp
    a_step = float(a_grid[1] - a_grid[0]) if len(a_grid) > 1 else 0.0
    b_step = float(b_grid[1] - b_grid[0]) if len(b_grid) > 1 else 0.0
    details = []
    passed = True
    for x0 in x_list:
        bs = [float(bb) for bb in b_grid if bb > a_star + 1e-9]
        vals_b = [cost_of(rep, costs, a_star, bb, x0) for bb in bs]
        b_hat = bs[int(np.argmax(vals_b))]
        ok_b = abs(b_hat - b_star) <= b_step + 1e-12
        a_ok_vals = [float(aa) for aa in a_grid if aa < b_star - 1e-9]
        vals_a = [cost_of(rep, costs, aa, b_star, x0) for aa in a_ok_vals]
        a_hat = a_ok_vals[int(np.argmin(vals_a))]
        ok_a = abs(a_hat - a_star) <= a_step + 1e-12
        details.append(
            {
                "x0": float(x0),
                "argmax_b": b_hat,
                "argmax_b_offset": b_hat - b_star,
                "argmin_a": a_hat,
                "argmin_a_offset": a_hat - a_star,
                "passed": ok_a and ok_b,
            }
        )
        passed = passed and ok_a and ok_b
    return {"passed": passed, "points": details}


def build_evaluator(
    rep: ScaleFunctionRep, costs: GameCosts, a: float, b: float
) -> ValueEvaluator:
    if rep.model.side is Side.SPECTRALLY_NEGATIVE:
        return sn_value_evaluator(rep, costs, a, b)
    return sp_value_evaluator(rep, costs, a, b)


def verify_solution(
    rep: ScaleFunctionRep,
    costs: GameCosts,
    a_star: float,
    b_star: float,
    collapsed: bool = False,
    grid: ViGrid = ViGrid(),
    saddle: bool = True,
    saddle_step: float = 0.01,
    saddle_span: float = 1.0,
) -> ViReport:
    """Full certification of a barrier pair against the model and costs."""
    model = rep.model
    v = build_evaluator(rep, costs, a_star, b_star)

    if collapsed:
        # no continuation region: check the two sign regions around the kink,
        # staying clear of the derivative jump
        below_x = np.linspace(b_star - grid.region_span, b_star - 2e-6, grid.n_per_region)
        res_b = [vi_residual(model, costs, v, float(x)) for x in below_x]
        below = RegionCheck(
            "below_a", list(map(float, below_x)), res_b, min(res_b), -grid.sign_tol,
            min(res_b) >= -grid.sign_tol,
        )
        above_x = np.linspace(b_star + 2e-6, b_star + grid.region_span, grid.n_per_region)
        res_a = [vi_residual(model, costs, v, float(x)) for x in above_x]
        above = RegionCheck(
            "above_b", list(map(float, above_x)), res_a, max(res_a), grid.sign_tol,
            max(res_a) <= grid.sign_tol,
        )
        continuation, slope_max = None, None
    else:
        below, continuation, above, slope_max = check_vi(model, costs, v, a_star, b_star, grid)

    fit_gaps, fit_passed = check_fit(model, costs, v, a_star, b_star, collapsed=collapsed)
    cb = check_convexity_and_bounds(costs, v, a_star, b_star)
    convexity_passed = cb["convexity_min"] >= -1e-7
    bounds_passed = (
        cb["deriv_min"] >= -1.0 - 1e-9
        and cb["deriv_max"] <= costs.K_g + 1e-9
        and cb["value_minus_g_min"] >= -1e-9
    )

    saddle_result = None
    if saddle and not collapsed and not math.isinf(a_star):
        x0 = 0.5 * (a_star + b_star)
        a_grid = a_star + np.arange(-saddle_span, saddle_span + saddle_step / 2, saddle_step)
        b_grid = b_star + np.arange(-saddle_span, saddle_span + saddle_step / 2, saddle_step)
        saddle_result = check_saddle_grid(
            rep, costs, model.side, a_star, b_star, [x0], a_grid, b_grid
        )

    return ViReport(
        below_a=below,
        continuation=continuation,
        above_b=above,
        below_slope_max=slope_max,
        fit_gaps=fit_gaps,
        fit_passed=fit_passed,
        convexity_min=cb["convexity_min"],
        convexity_passed=convexity_passed,
        deriv_min=cb["deriv_min"],
        deriv_max=cb["deriv_max"],
        value_minus_g_min=cb["value_minus_g_min"],
        bounds_passed=bounds_passed,
        saddle=saddle_result,
    )
