"""Closed-form scale functions built from an exponential-sum root representation.

Everything here evaluates sums of the form ``sum_k A_k exp(r_k x)`` and their
termwise integrals/derivatives, where r_0 = Phi(q) > 0 and the remaining
exponents are the negated left-half-plane roots of psi = q.  Complex exponents
come in exact conjugate pairs, so sums are real up to rounding; the residue is
checked on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import LevyModelSpec, RootSet, find_roots, mean_drift

# Relative size below which subordinate exponential terms are dropped in favor
# of the leading exp(Phi q x) term.
_DOMINANT_CUTOFF = 1e-16


@dataclass(frozen=True)
class ScaleFunctionRep:
    roots: RootSet
    q: float
    model: LevyModelSpec
    mu: float = field(init=False)
    _r: np.ndarray = field(init=False, repr=False)   # exponents, r[0] = Phi(q)
    _A: np.ndarray = field(init=False, repr=False)   # weights, A[0] = 1/psi'(Phi)
    _x_dominant: float = field(init=False, repr=False)

    def __post_init__(self):
        rs = self.roots
        r = np.concatenate(([complex(rs.phi_q, 0.0)], -rs.xi))
        A = np.concatenate(([complex(1.0 / rs.psi_prime_at_phi, 0.0)], -rs.coeffs))
        a0 = A[0].real
        x_dom = 0.0
        for k in range(1, len(r)):
            gap = rs.phi_q - r[k].real
            mag = abs(A[k])
            if mag == 0.0:
                continue
            x_dom = max(x_dom, math.log(mag / (_DOMINANT_CUTOFF * a0)) / gap)
        object.__setattr__(self, "mu", mean_drift(self.model))
        object.__setattr__(self, "_r", r)
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_x_dominant", x_dom)

    @property
    def phi_q(self) -> float:
        return self.roots.phi_q


def scale_rep(model: LevyModelSpec) -> ScaleFunctionRep:
    """Root-finding plus representation assembly for a model."""
    return ScaleFunctionRep(roots=find_roots(model), q=model.q, model=model)


def _as_real(value: complex, where: str) -> float:
    v = complex(value)
    if abs(v.imag) > 1e-10 * (1.0 + abs(v.real)):
        raise ArithmeticError(f"imaginary residue {v.imag:.3e} in {where}")
    return v.real


def _exp_lead(arg: float) -> float:
    # leading exponential, saturating instead of raising on overflow
    return math.inf if arg > 709.0 else math.exp(arg)


def w(rep: ScaleFunctionRep, x: float) -> float:
    """Scale function W(x); zero on the negative half line."""
    if x < 0.0:
        return 0.0
    if x >= rep._x_dominant:
        return rep._A[0].real * _exp_lead(rep.roots.phi_q * x)
    return _as_real(np.sum(rep._A * np.exp(rep._r * x)), "w")


def w_prime(rep: ScaleFunctionRep, x: float) -> float:
    """W'(x) for x > 0; at x = 0 the right limit W'(0+) is returned."""
    if x < 0.0:
        raise DomainError("w_prime needs x >= 0")
    if x >= rep._x_dominant:
        return rep._A[0].real * rep.roots.phi_q * _exp_lead(rep.roots.phi_q * x)
    return _as_real(np.sum(rep._A * rep._r * np.exp(rep._r * x)), "w_prime")


def w_second(rep: ScaleFunctionRep, x: float) -> float:
    """W''(x) for x > 0; at x = 0 the right limit is returned."""
    if x < 0.0:
        raise DomainError("w_second needs x >= 0")
    if x >= rep._x_dominant:
        return rep._A[0].real * rep.roots.phi_q**2 * _exp_lead(rep.roots.phi_q * x)
    return _as_real(np.sum(rep._A * rep._r**2 * np.exp(rep._r * x)), "w_second")


def w_bar(rep: ScaleFunctionRep, x: float) -> float:
    """Antiderivative of W from 0: integral_0^x W(y) dy (zero for x <= 0)."""
    if x <= 0.0:
        return 0.0
    if x >= rep._x_dominant:
        r0 = rep.roots.phi_q
        tail = np.sum(rep._A[1:] / rep._r[1:]).real
        return rep._A[0].real * (_exp_lead(r0 * x) - 1.0) / r0 - tail
    return _as_real(np.sum(rep._A * (np.exp(rep._r * x) - 1.0) / rep._r), "w_bar")


def w_bar2(rep: ScaleFunctionRep, x: float) -> float:
    """Double antiderivative: integral_0^x integral_0^y W(u) du dy."""
    if x <= 0.0:
        return 0.0
    if x >= rep._x_dominant:
        r0 = rep.roots.phi_q
        a0 = rep._A[0].real
        lead = a0 * ((_exp_lead(r0 * x) - 1.0) / r0 - x) / r0
        tail = np.sum(rep._A[1:] * (1.0 + rep._r[1:] * x) / rep._r[1:] ** 2).real
        return lead - tail
    val = np.sum(rep._A * ((np.exp(rep._r * x) - 1.0) / rep._r - x) / rep._r)
    return _as_real(val, "w_bar2")


def w_mom1(rep: ScaleFunctionRep, x: float) -> float:
    """First-moment integral: integral_0^x u W(u) du."""
    if x <= 0.0:
        return 0.0
    if x >= rep._x_dominant:
        r0 = rep.roots.phi_q
        a0 = rep._A[0].real
        lead = a0 * (_exp_lead(r0 * x) * (r0 * x - 1.0) + 1.0) / r0**2
        tail = np.sum(rep._A[1:] / rep._r[1:] ** 2).real
        return lead + tail
    e = np.exp(rep._r * x)
    val = np.sum(rep._A * (e * (rep._r * x - 1.0) + 1.0) / rep._r**2)
    return _as_real(val, "w_mom1")


def z(rep: ScaleFunctionRep, x: float) -> float:
    """Z(x) = 1 + q * integral_0^x W; identically 1 for x <= 0."""
    if x <= 0.0:
        return 1.0
    return 1.0 + rep.q * w_bar(rep, x)


def z_bar(rep: ScaleFunctionRep, x: float) -> float:
    """Antiderivative of Z from 0; equals x for x <= 0."""
    if x <= 0.0:
        return x
    return x + rep.q * w_bar2(rep, x)


def w_phi(rep: ScaleFunctionRep, x: float) -> float:
    """Exponentially tilted scale function exp(-Phi(q) x) W(x)."""
    if x < 0.0:
        return 0.0
    shifted = rep._r - rep.roots.phi_q  # leading exponent becomes exactly 0
    return _as_real(np.sum(rep._A * np.exp(shifted * x)), "w_phi")


def w_bar_gap(rep: ScaleFunctionRep, x: float) -> float:
    """Stable evaluation of w_bar(x) - w(x)/Phi(q).

    The leading exponential cancels exactly (its coefficient is identically
    zero, so the sum runs over the decaying terms only), the combination stays
    O(1) for large x and tends to -1/q; forming it from w_bar and w directly
    would lose all precision once exp(Phi(q) x) dominates.
    """
    if x < 0.0:
        return 0.0
    r0 = rep.roots.phi_q
    coef = rep._A[1:] * (1.0 / rep._r[1:] - 1.0 / r0)
    const = np.sum(rep._A / rep._r)
    val = np.sum(coef * np.exp(rep._r[1:] * x)) - const
    return _as_real(val, "w_bar_gap")


def w_gap_prime(rep: ScaleFunctionRep, x: float) -> float:
    """Stable evaluation of w(x) - w_prime(x)/Phi(q) (derivative of w_bar_gap)."""
    if x < 0.0:
        return 0.0
    r0 = rep.roots.phi_q
    coef = rep._A[1:] * (1.0 - rep._r[1:] / r0)
    return _as_real(np.sum(coef * np.exp(rep._r[1:] * x)), "w_gap_prime")


def down_transform(rep: ScaleFunctionRep, x: float) -> float:
    """Z(x) - q W(x)/Phi(q): the discounted down-crossing transform, in [0, 1]."""
    return 1.0 + rep.q * w_bar_gap(rep, x)
