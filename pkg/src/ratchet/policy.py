"""Dual value function, initial multiplier, primal value and portfolio.

Functions take a solved band (``FreeBoundaries`` or ``MertonBand``) as the
first argument and accept scalars or numpy arrays for ``y`` and ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .boundaries import FreeBoundaries, MertonBand, _out
from .errors import DomainError
from .params import crra_utility
from .rootfind import expand_bracket, safeguarded_newton


class Region(str, Enum):
    IR = "IR"
    NR = "NR"
    DR = "DR"


@dataclass(frozen=True)
class AgentState:
    """Shadow price and consumption with the derived dual ratio."""

    y: float
    c: float
    z: float
    region: Region


def _pos(y, c):
    y = np.asarray(y, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(~(y > 0)) or np.any(~(c > 0)):
        raise DomainError("y and c must be positive")
    return y, c


def region_of(fb, y: float, c: float) -> Region:
    """Classify ``(y, c)``; the band edges belong to the adjustment regions."""
    z = float(y) * float(c) ** fb.params.gamma
    if z <= fb.b_alpha:
        return Region.IR
    if z >= fb.b_beta:
        return Region.DR
    return Region.NR


def agent_state(fb, y: float, c: float) -> AgentState:
    y, c = float(y), float(c)
    return AgentState(y=y, c=c, z=y * c ** fb.params.gamma, region=region_of(fb, y, c))


def reflected_consumption(fb, y, c):
    """Consumption after the immediate jump that brings z back into the band."""
    y, c = _pos(y, c)
    g = fb.params.gamma
    z = y * c ** g
    c_up = (y / fb.b_alpha) ** (-1.0 / g)
    c_dn = (y / fb.b_beta) ** (-1.0 / g)
    return _out(np.where(z < fb.b_alpha, c_up, np.where(z > fb.b_beta, c_dn, c)))


# -- frictionless closed forms ------------------------------------------------
def _merton_j(fb: MertonBand, y):
    g = fb.params.gamma
    return g / (1.0 - g) * y ** ((g - 1.0) / g) / fb.constants.big_k


def _merton_jy(fb: MertonBand, y):
    return -(y ** (-1.0 / fb.params.gamma)) / fb.constants.big_k


def _merton_jyy(fb: MertonBand, y):
    g = fb.params.gamma
    return y ** (-1.0 / g - 1.0) / (g * fb.constants.big_k)


# -- band formulas ------------------------------------------------------------
def _band_j(fb: FreeBoundaries, y, c):
    p, k = fb.params, fb.constants
    z = y * c ** p.gamma
    t1, t2 = fb._terms(z, 0, 0)
    bracket = t1 / k.e1 + t2 / k.e2 + 1.0 / (p.delta * (1.0 - p.gamma)) - z / p.r
    return c ** (1.0 - p.gamma) * bracket


def _band_jy(fb: FreeBoundaries, y, c):
    z = y * c ** fb.params.gamma
    return -c * np.asarray(fb.wealth_ratio(z))


def _band_jyy(fb: FreeBoundaries, y, c):
    z = y * c ** fb.params.gamma
    return c * np.asarray(fb.portfolio_ratio(z)) * fb.params.sigma / fb.constants.theta / y


def j_eval(fb, y, c):
    """Dual value J(y, c) in all three regions."""
    y, c = _pos(y, c)
    if fb.frictionless:
        return _out(_merton_j(fb, y) + 0.0 * c)
    g = fb.params.gamma
    c_ref = np.asarray(reflected_consumption(fb, y, c))
    base = _band_j(fb, y, c_ref)
    z = y * c ** g
    cost = np.where(z < fb.b_alpha, fb.params.alpha, np.where(z > fb.b_beta, -fb.params.beta, 0.0))
    adj = cost * (np.asarray(crra_utility(c, g)) - np.asarray(crra_utility(c_ref, g)))
    return _out(base + adj)


def j_y(fb, y, c):
    """Partial derivative of J in y, which is minus the optimal wealth."""
    y, c = _pos(y, c)
    if fb.frictionless:
        return _out(_merton_jy(fb, y) + 0.0 * c)
    c_ref = np.asarray(reflected_consumption(fb, y, c))
    return _out(_band_jy(fb, y, c_ref))


def j_yy(fb, y, c):
    """Second partial derivative of J in y."""
    y, c = _pos(y, c)
    if fb.frictionless:
        return _out(_merton_jyy(fb, y) + 0.0 * c)
    c_ref = np.asarray(reflected_consumption(fb, y, c))
    return _out(_band_jyy(fb, y, c_ref))


def solve_initial_multiplier(fb, x0: float, c0: float) -> tuple[float, float]:
    """Multiplier ``y*`` with ``-J_y(y*, c0) = x0`` and the post-jump consumption.

    The search starts from the frictionless multiplier ``u'(K x0)``, grows a
    bracket geometrically and then refines in log y.

    Returns
    -------
    (y_star, c_adjusted)
    """
    if not (x0 > 0 and c0 > 0):
        raise DomainError("x0 and c0 must be positive")
    g = fb.params.gamma
    y0 = (fb.constants.big_k * x0) ** (-g)

    def gap(ly: float) -> float:
        return -float(j_y(fb, math.exp(ly), c0)) / x0 - 1.0

    def gap_prime(ly: float) -> float:
        y = math.exp(ly)
        return -y * float(j_yy(fb, y, c0)) / x0

    # bracket in y, then solve in log y
    lo, hi = expand_bracket(lambda y: gap(math.log(y)), y0)
    if lo == hi:
        y_star = lo
    else:
        y_star = math.exp(safeguarded_newton(gap, math.log(lo), math.log(hi),
                                             fprime=gap_prime, xtol=1e-15, rtol=0.0))
    return y_star, float(reflected_consumption(fb, y_star, c0))


def initial_multiplier_direct(fb, x0, c0):
    """Vectorized multiplier by inverting the band map directly.

    Equivalent to ``solve_initial_multiplier`` but works on arrays: the
    post-jump consumption is read off the thresholds and only the wealth
    ratio has to be inverted.
    """
    x0 = np.asarray(x0, dtype=float)
    c0 = np.broadcast_to(np.asarray(c0, dtype=float), x0.shape)
    g = fb.params.gamma
    ratio = x0 / c0
    c_adj = np.where(ratio > fb.x_hi, x0 / fb.x_hi, np.where(ratio < fb.x_lo, x0 / fb.x_lo, c0))
    z = np.asarray(fb.wealth_ratio_inverse(np.clip(x0 / c_adj, fb.x_lo, fb.x_hi)))
    y = z * c_adj ** (-g)
    return _out(y), _out(c_adj)


def primal_value(fb, x0: float, c0: float) -> float:
    """Optimal value ``V(x0, c0) = min_y J(y, c0) + y x0``."""
    y_star, _ = solve_initial_multiplier(fb, x0, c0)
    return float(j_eval(fb, y_star, c0)) + y_star * x0


def merton_value(fb, x0: float) -> float:
    """Frictionless value ``K^(-gamma) x^(1-gamma) / (1-gamma)``."""
    g = fb.params.gamma
    return fb.constants.big_k ** (-g) * x0 ** (1.0 - g) / (1.0 - g)


def _band_z(fb, y, c):
    y, c = _pos(y, c)
    return y * c ** fb.params.gamma, c


def portfolio_pi(fb, y, c):
    """Optimal risky dollar amount; defined on the closed band only."""
    z, c = _band_z(fb, y, c)
    return _out(c * np.asarray(fb.portfolio_ratio(z)))


def rcrra(fb, y, c):
    """Revealed relative risk aversion ``((mu-r)/sigma^2) X / pi``."""
    z, _ = _band_z(fb, y, c)
    return fb.rcrra_z(z)


def band_curves(fb, n: int = 201) -> dict:
    """Consumption-invariant curves over the band coordinate s in [0, 1]."""
    s = np.linspace(0.0, 1.0, n)
    z = np.asarray(fb.z_from_s(s))
    return {
        "s": s,
        "z": z,
        "x_over_c": np.asarray(fb.wealth_ratio(z)),
        "pi_over_c": np.asarray(fb.portfolio_ratio(z)),
        "share": np.asarray(fb.share(z)),
        "rcrra": np.asarray(fb.rcrra_z(z)),
    }
