"""Bisection on monotone / single-sign-change functions with geometric bracket growth."""

from __future__ import annotations

from typing import Callable

from .errors import NoBracket, ToleranceNotMet

MAX_DOUBLINGS = 1000


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    f_hi: float,
    xtol: float = 1e-10,
    maxiter: int = 200,
) -> float:
    """Root of f on [lo, hi] given endpoint values of opposite sign."""
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise NoBracket(f"no sign change on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo < xtol:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
    raise ToleranceNotMet(f"bisection did not reach xtol={xtol} in {maxiter} iterations")


def grow_up(f: Callable[[float], float], start: float, want_negative: bool, step0: float = 1.0):
    """Double a step upward from ``start`` until f changes to the wanted sign.

    Returns (lo, hi, f_lo, f_hi) bracketing the change.
    """
    step = step0
    prev = start
    f_prev = f(start)
    if (f_prev < 0.0) == want_negative:
        raise NoBracket("function already has the target sign at the starting point")
    for _ in range(MAX_DOUBLINGS):
        nxt = start + step
        f_nxt = f(nxt)
        if (f_nxt < 0.0) == want_negative:
            return prev, nxt, f_prev, f_nxt
        prev, f_prev = nxt, f_nxt
        step *= 2.0
    raise NoBracket("no sign change found after maximum bracket doublings")


def grow_down(f: Callable[[float], float], start: float, want_negative: bool, step0: float = 1.0):
    """Mirror of grow_up, stepping downward from ``start``."""
    step = step0
    prev = start
    f_prev = f(start)
    if (f_prev < 0.0) == want_negative:
        raise NoBracket("function already has the target sign at the starting point")
    for _ in range(MAX_DOUBLINGS):
        nxt = start - step
        f_nxt = f(nxt)
        if (f_nxt < 0.0) == want_negative:
            return nxt, prev, f_nxt, f_prev
        prev, f_prev = nxt, f_nxt
        step *= 2.0
    raise NoBracket("no sign change found after maximum bracket doublings")
