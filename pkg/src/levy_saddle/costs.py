"""Cost data for the game: affine running cost h and affine terminal cost g."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import AssumptionError


@dataclass(frozen=True)
class Affine:
    slope: float
    intercept: float

    def __call__(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class GameCosts:
    """h(x) = -alpha_h x + beta_h (running), g(x) = C_g + K_g x (terminal).

    The terminal slope must satisfy K_g > -1: otherwise a unit of upward
    control costs more than the terminal payoff it creates and the game
    degenerates.
    """

    alpha_h: float
    beta_h: float
    C_g: float
    K_g: float

    def __post_init__(self):
        if not self.K_g > -1.0:
            raise AssumptionError("terminal cost slope K must be > -1")

    @property
    def h(self) -> Affine:
        return Affine(-self.alpha_h, self.beta_h)

    @property
    def g(self) -> Affine:
        return Affine(self.K_g, self.C_g)

    def h_tilde(self, q: float) -> Affine:
        """Discount-tilted running cost h(x) + q x."""
        return Affine(q - self.alpha_h, self.beta_h)


@dataclass(frozen=True)
class GeneralGameCosts:
    """Quadrature-backed running cost for the spectrally negative solver.

    ``h_fn`` must be C^1 with h_fn'(x) + q strictly negative everywhere, so
    the stopping-boundary equation keeps a unique zero; the terminal cost
    stays affine.
    """

    h_fn: Callable[[float], float]
    h_prime_fn: Callable[[float], float]
    C_g: float
    K_g: float

    def __post_init__(self):
        if not self.K_g > -1.0:
            raise AssumptionError("terminal cost slope K must be > -1")

    @property
    def g(self) -> Affine:
        return Affine(self.K_g, self.C_g)
