"""Model primitives, derived constants and CRRA utility helpers.

All rates are annualized decimals and all times are in years.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import AssumptionViolation, DomainError

PARAM_FIELDS = ("r", "mu", "sigma", "delta", "gamma", "alpha", "beta")


@dataclass(frozen=True)
class ModelParams:
    """Market and preference primitives.

    Parameters
    ----------
    r : float
        Risk-free rate.
    mu : float
        Drift of the risky asset.
    sigma : float
        Volatility of the risky asset.
    delta : float
        Subjective discount rate.
    gamma : float
        Relative risk aversion, must differ from 1.
    alpha : float
        Utility cost per unit of upward consumption adjustment.
    beta : float
        Utility cost per unit of downward consumption adjustment.

    Notes
    -----
    Construction does not validate; ``validate`` (called by every solver
    entry point) does. This keeps market-only uses such as path generation
    with ``sigma = 0`` possible.
    """

    r: float
    mu: float
    sigma: float
    delta: float
    gamma: float
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def theta(self) -> float:
        return (self.mu - self.r) / self.sigma

    @property
    def is_frictionless(self) -> bool:
        return self.alpha == 0.0 and self.beta == 0.0

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "ModelParams":
        """Check every standing assumption, raising on the first failure."""
        for name in PARAM_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, numbers.Real) or not math.isfinite(v):
                raise AssumptionViolation(name, "must be a finite number")
        if self.r <= 0:
            raise AssumptionViolation("r", "r must be positive")
        if self.sigma <= 0:
            raise AssumptionViolation("sigma", "sigma must be positive")
        if self.mu <= self.r:
            raise AssumptionViolation("mu", "mu must exceed r")
        if self.delta <= 0:
            raise AssumptionViolation("delta", "delta must be positive")
        if self.gamma <= 0:
            raise AssumptionViolation("gamma", "gamma must be positive")
        if self.gamma == 1:
            raise AssumptionViolation("gamma", "gamma = 1 (log utility) is not supported")
        if self.alpha < 0:
            raise AssumptionViolation("alpha", "alpha must be nonnegative")
        if self.delta * self.alpha >= 1:
            raise AssumptionViolation(
                "alpha", f"delta*alpha = {self.delta * self.alpha:.6g} must be below 1")
        if self.beta < 0:
            raise AssumptionViolation("beta", "beta must be nonnegative")
        if big_k(self) <= 0:
            raise AssumptionViolation("K", f"K = {big_k(self):.6g} must be positive")
        return self


@dataclass(frozen=True)
class DerivedConstants:
    """Constants that depend only on the primitives.

    Attributes
    ----------
    theta : float
        Market price of risk.
    kappa : float
        ``(1 - delta*alpha) / (1 + delta*beta)``, in (0, 1].
    big_k : float
        Merton consumption-to-wealth ratio.
    m1, m2 : float
        Positive and negative roots of the characteristic quadratic.
    params : ModelParams
        The primitives these were derived from.
    """

    theta: float
    kappa: float
    big_k: float
    m1: float
    m2: float
    params: ModelParams

    @property
    def e1(self) -> float:
        g = self.params.gamma
        return 1.0 - g + g * self.m1

    @property
    def e2(self) -> float:
        g = self.params.gamma
        return 1.0 - g + g * self.m2

    def quadratic(self, m: float) -> float:
        p = self.params
        half = 0.5 * self.theta ** 2
        return half * m * m + (p.delta - p.r - half) * m - p.delta


def big_k(params: ModelParams) -> float:
    """Merton consumption-to-wealth ratio K."""
    g = params.gamma
    theta = params.theta
    return params.r + (params.delta - params.r) / g + (g - 1.0) / (2.0 * g * g) * theta ** 2


def characteristic_roots(theta: float, delta: float, r: float) -> tuple[float, float]:
    """Roots of ``(theta^2/2) m^2 + (delta - r - theta^2/2) m - delta = 0``.

    Uses the cancellation-free form for the smaller-magnitude root.
    """
    a = 0.5 * theta ** 2
    b = delta - r - a
    c = -delta
    disc = math.sqrt(b * b - 4.0 * a * c)
    q = -0.5 * (b + math.copysign(disc, b))
    x1, x2 = q / a, c / q
    return (x1, x2) if x1 > x2 else (x2, x1)


def derive_constants(params: ModelParams) -> DerivedConstants:
    """Validate ``params`` and compute theta, kappa, K, m1 and m2."""
    params.validate()
    theta = params.theta
    m1, m2 = characteristic_roots(theta, params.delta, params.r)
    kappa = (1.0 - params.delta * params.alpha) / (1.0 + params.delta * params.beta)
    return DerivedConstants(theta=theta, kappa=kappa, big_k=big_k(params), m1=m1, m2=m2,
                            params=params)


def _positive(x, name: str):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be positive")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def crra_utility(c, gamma: float):
    """CRRA utility ``c**(1-gamma) / (1-gamma)``."""
    c = _positive(c, "c")
    return _out(c ** (1.0 - gamma) / (1.0 - gamma))


def marginal_utility(c, gamma: float):
    """``u'(c) = c**(-gamma)``."""
    c = _positive(c, "c")
    return _out(c ** (-gamma))


def inverse_marginal(y, gamma: float):
    """Inverse of marginal utility, ``I(y) = y**(-1/gamma)``."""
    y = _positive(y, "y")
    return _out(y ** (-1.0 / gamma))


def merton_share(params: ModelParams) -> float:
    """Frictionless risky share of wealth ``(mu - r) / (gamma sigma^2)``."""
    params.validate()
    return (params.mu - params.r) / (params.gamma * params.sigma ** 2)


def merton_consumption_ratio(params: ModelParams) -> float:
    """Frictionless consumption-to-wealth ratio K."""
    params.validate()
    return big_k(params)
