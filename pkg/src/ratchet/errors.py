"""Exception hierarchy.

Two families matter to callers: configuration problems (bad inputs, exit
code 2 on the command line) and numerical failures (exit code 3).
"""

from __future__ import annotations


class RatchetError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RatchetError, ValueError):
    """Invalid or missing configuration value.

    The offending key is kept on ``key`` so front ends can report it.
    """

    def __init__(self, key: str, message: str | None = None):
        self.key = key
        super().__init__(key if message is None else f"{key}: {message}")


class AssumptionViolation(ConfigError):
    """Model primitives violate a standing assumption of the model."""


class DomainError(RatchetError, ValueError):
    """Argument outside the domain where a formula is defined."""


class NotApplicable(RatchetError, ValueError):
    """Operation has no meaning for these parameters (frictionless case)."""


class NumericalError(RatchetError, RuntimeError):
    """Base class for numerical breakdowns."""


class BracketFailure(NumericalError):
    """A root bracket without a sign change."""

    def __init__(self, message: str, lo: float = float("nan"), hi: float = float("nan"),
                 f_lo: float = float("nan"), f_hi: float = float("nan")):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        super().__init__(f"{message} [f({lo:.6g})={f_lo:.6g}, f({hi:.6g})={f_hi:.6g}]")


class InvariantViolation(NumericalError):
    """A solved quantity fails a structural inequality it must satisfy."""


class DegenerateRegression(NumericalError):
    """Regression design without usable variation."""
