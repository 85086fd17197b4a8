"""Optimal consumption and investment with costly consumption adjustment.

The agent pays a utility cost per unit of upward (``alpha``) or downward
(``beta``) change in consumption. Consumption then follows a band policy,
and wealth, portfolio and revealed risk aversion are closed-form functions
of a single dual state.
"""

from .boundaries import FreeBoundaries, MertonBand, solve
from .errors import (AssumptionViolation, BracketFailure, ConfigError, DegenerateRegression,
                     DomainError, InvariantViolation, NotApplicable)
from .params import DerivedConstants, ModelParams, derive_constants, merton_share

__all__ = [
    "ModelParams", "DerivedConstants", "derive_constants", "merton_share",
    "FreeBoundaries", "MertonBand", "solve",
    "AssumptionViolation", "BracketFailure", "ConfigError", "DegenerateRegression",
    "DomainError", "InvariantViolation", "NotApplicable",
]
