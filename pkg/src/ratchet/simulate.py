"""Market paths, shadow-price evolution and reflected consumption.

Consumption is regulated by projecting the dual ratio back onto the
violated band edge after every step. Wealth and portfolio are read off the
closed-form maps, never integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .params import DerivedConstants
from .policy import initial_multiplier_direct, solve_initial_multiplier

DEFAULT_DT = 1.0 / 24.0


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int seed or a ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def grid_steps(horizon: float, dt: float) -> int:
    """Number of steps of size ``dt`` in ``horizon``; the ratio must be whole."""
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError("dt", "must be positive")
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ConfigError("horizon", "must be positive")
    n = horizon / dt
    steps = int(round(n))
    if steps < 1 or abs(n - steps) > 1e-9 * max(1.0, n):
        raise ConfigError("dt", f"horizon {horizon} is not a multiple of dt {dt}")
    return steps


@dataclass(frozen=True)
class MarketPath:
    """One realization of the risky asset on a uniform grid.

    Attributes
    ----------
    dt : float
    steps : int
    shocks : ndarray, shape (steps,)
        Standard normal innovations.
    brownian : ndarray, shape (steps + 1,)
        Cumulative Brownian motion, starting at 0.
    gross_returns : ndarray, shape (steps,)
        ``S[i+1] / S[i]``.
    mu, sigma : float
    seed : int or None
    """

    dt: float
    steps: int
    shocks: np.ndarray
    brownian: np.ndarray
    gross_returns: np.ndarray
    mu: float
    sigma: float
    seed: int | None = None

    @property
    def horizon(self) -> float:
        return self.dt * self.steps

    @property
    def prices(self) -> np.ndarray:
        """Price level with ``S[0] = 1``."""
        return np.concatenate(([1.0], np.cumprod(self.gross_returns)))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


def market_from_shocks(mu: float, sigma: float, shocks, dt: float,
                       seed: int | None = None) -> MarketPath:
    """Build a path from given standard normal shocks."""
    shocks = np.asarray(shocks, dtype=float)
    sq = math.sqrt(dt)
    brownian = np.concatenate(([0.0], np.cumsum(sq * shocks)))
    gross = np.exp((mu - 0.5 * sigma ** 2) * dt + sigma * sq * shocks)
    return MarketPath(dt=dt, steps=shocks.size, shocks=shocks, brownian=brownian,
                      gross_returns=gross, mu=mu, sigma=sigma, seed=seed)


def simulate_market(params, horizon: float, dt: float = DEFAULT_DT,
                    seed: int | None = None) -> MarketPath:
    """Simulate a geometric Brownian motion path.

    ``params`` needs only ``mu`` and ``sigma``; no other validation is done
    so that degenerate markets (``sigma = 0``) can be generated.
    """
    steps = grid_steps(horizon, dt)
    shocks = make_rng(seed).standard_normal(steps)
    return market_from_shocks(params.mu, params.sigma, shocks, dt, seed)


def evolve_shadow_price(y, shock, dt: float, constants: DerivedConstants):
    """Exact lognormal step of the shadow price of wealth."""
    p = constants.params
    th = constants.theta
    return y * np.exp((p.delta - p.r - 0.5 * th * th) * dt - th * math.sqrt(dt) * np.asarray(shock))


def reflect_consumption(y_next, c, fb):
    """Push consumption so the dual ratio stays in the band.

    Returns
    -------
    (c_next, dc_up, dc_dn)
    """
    scalar = np.ndim(y_next) == 0 and np.ndim(c) == 0
    return _reflect(np.asarray(y_next, float), np.asarray(c, float),
                    fb.b_alpha, fb.b_beta, fb.params.gamma, scalar=scalar)


def _reflect(y, c, b_alpha, b_beta, gamma, scalar=False):
    z = y * c ** gamma
    lo = z < b_alpha
    hi = z > b_beta
    c_next = np.where(lo, (y / b_alpha) ** (-1.0 / gamma),
                      np.where(hi, (y / b_beta) ** (-1.0 / gamma), c))
    up = np.where(lo, c_next - c, 0.0)
    dn = np.where(hi, c - c_next, 0.0)
    if scalar:
        return float(c_next), float(up), float(dn)
    return c_next, up, dn


def consumption_paths(y0, c0, shocks, dt, constants, b_alpha, b_beta):
    """Reflected consumption for many agents sharing shocks.

    Parameters
    ----------
    y0, c0 : ndarray, shape (..., n_agents)
        Post-jump initial states.
    shocks : ndarray, shape (..., steps)
        Shocks, with leading axes matching those of ``y0``.
    b_alpha, b_beta : float or ndarray broadcastable to ``y0``

    Returns
    -------
    y, c, up, dn : ndarray, shape (..., steps + 1, n_agents)
        Paths of shadow price, consumption and cumulative regulators.
    """
    g = constants.params.gamma
    y0 = np.asarray(y0, float)
    c0 = np.asarray(c0, float)
    shocks = np.asarray(shocks, float)
    steps = shocks.shape[-1]
    shape = y0.shape[:-1] + (steps + 1,) + y0.shape[-1:]
    ys = np.empty(shape)
    cs = np.empty(shape)
    ups = np.zeros(shape)
    dns = np.zeros(shape)
    ys[..., 0, :], cs[..., 0, :] = y0, c0
    y, c = y0, c0
    up_tot = np.zeros_like(y0)
    dn_tot = np.zeros_like(y0)
    for j in range(steps):
        y = evolve_shadow_price(y, shocks[..., j, None], dt, constants)
        c, du, dd = _reflect(y, c, b_alpha, b_beta, g)
        up_tot = up_tot + du
        dn_tot = dn_tot + dd
        ys[..., j + 1, :], cs[..., j + 1, :] = y, c
        ups[..., j + 1, :], dns[..., j + 1, :] = up_tot, dn_tot
    return ys, cs, ups, dns


@dataclass(frozen=True)
class PathRecord:
    """Trajectories of one agent on the market grid."""

    times: np.ndarray
    y: np.ndarray
    z: np.ndarray
    c: np.ndarray
    c_up: np.ndarray
    c_dn: np.ndarray
    x: np.ndarray
    pi: np.ndarray
    rcrra: np.ndarray
    n_up: int
    n_dn: int
    c_initial: float
    seed: int | None = None

    @property
    def share(self) -> np.ndarray:
        return self.pi / self.x

    def summary(self) -> dict:
        return {"n_up": self.n_up, "n_dn": self.n_dn,
                "rcrra_min": float(self.rcrra.min()), "rcrra_max": float(self.rcrra.max()),
                "c_initial": self.c_initial, "seed": self.seed}


def simulate_agent(x0: float, c0: float, market: MarketPath, fb) -> PathRecord:
    """Optimal consumption, wealth, portfolio and RCRRA along ``market``.

    ``c0`` is the consumption the agent arrives with; if ``x0/c0`` lies
    outside the thresholds it jumps at time zero and ``c[0]`` is the
    post-jump value (``c_initial`` keeps the pre-jump one).
    """
    y_star, c_adj = solve_initial_multiplier(fb, x0, c0)
    ys, cs, ups, dns = consumption_paths(np.array([y_star]), np.array([c_adj]),
                                         market.shocks, market.dt, fb.constants,
                                         fb.b_alpha, fb.b_beta)
    y, c, up, dn = ys[:, 0], cs[:, 0], ups[:, 0], dns[:, 0]
    z = np.clip(y * c ** fb.params.gamma, fb.b_alpha, fb.b_beta)
    x = c * np.asarray(fb.wealth_ratio(z))
    pi = c * np.asarray(fb.portfolio_ratio(z))
    rc = np.asarray(fb.rcrra_z(z))
    n_up = int(np.count_nonzero(np.diff(up) > 0))
    n_dn = int(np.count_nonzero(np.diff(dn) > 0))
    return PathRecord(times=market.times, y=y, z=z, c=c, c_up=up, c_dn=dn, x=x, pi=pi,
                      rcrra=rc, n_up=n_up, n_dn=n_dn, c_initial=float(c0), seed=market.seed)


def initial_states(fb, x0, c0):
    """Vectorized post-jump ``(y, c)`` for arrays of initial wealth."""
    y, c = initial_multiplier_direct(fb, x0, c0)
    return np.asarray(y), np.asarray(c)


def euler_wealth(record: PathRecord, market: MarketPath, params) -> np.ndarray:
    """Integrate the budget equation with the recorded controls (test oracle).

    Uses the same Brownian increments as the market path.
    """
    dt = market.dt
    sq = math.sqrt(dt)
    x = np.empty(market.steps + 1)
    x[0] = record.x[0]
    for j in range(market.steps):
        drift = params.r * x[j] + record.pi[j] * (params.mu - params.r) - record.c[j]
        x[j + 1] = x[j] + drift * dt + params.sigma * record.pi[j] * sq * market.shocks[j]
    return x


__all__ = ["MarketPath", "PathRecord", "simulate_market", "market_from_shocks",
           "evolve_shadow_price", "reflect_consumption", "consumption_paths",
           "simulate_agent", "initial_states", "euler_wealth", "make_rng", "grid_steps",
           "DEFAULT_DT"]
