"""Exception types shared across the solver stack."""


class LevySaddleError(Exception):
    """Base class for all package-specific errors."""


class SingularResolvent(LevySaddleError):
    """(sI - T) is numerically singular at the requested point."""


class RepeatedRoots(LevySaddleError):
    """Roots of psi(s) = q are too close for the exponential-sum formulas."""


class NoBracket(LevySaddleError):
    """A sign change could not be bracketed; model assumptions are likely violated."""


class ToleranceNotMet(LevySaddleError):
    """Iteration budget exhausted before reaching the target residual."""


class DomainError(LevySaddleError, ValueError):
    """Argument outside the domain of the requested quantity."""


class KinkTooClose(LevySaddleError):
    """Generator requested at a point where the value function has a derivative jump."""


class ConfigError(LevySaddleError, ValueError):
    """Invalid simulation or sweep configuration."""


class AssumptionError(LevySaddleError, ValueError):
    """Cost or model parameters violate the standing assumptions of the game."""
