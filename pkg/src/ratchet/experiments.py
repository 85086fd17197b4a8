"""Monte Carlo studies built on the band solution.

Two experiments live here: a pooled regression of risky-share changes on
wealth changes in a heterogeneous population along a chosen market
scenario, and the time-series moments of aggregate consumption (growth,
IMRS, equity premium, autocorrelation) after temporal aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import stats

from .boundaries import BandStack, solve
from .errors import ConfigError, DegenerateRegression
from .params import ModelParams, derive_constants
from .simulate import (MarketPath, evolve_shadow_price, grid_steps, make_rng,
                       market_from_shocks, _reflect)

# replications below this are flagged as a smoke run
LOW_REP_THRESHOLD = 100


# -- population --------------------------------------------------------------
@dataclass(frozen=True)
class PopulationConfig:
    """Heterogeneous population of adjustment costs.

    ``alpha`` and ``beta`` are lognormal with the given mean and variance;
    a zero variance gives a point mass. ``wealth_init`` is ``"uniform"``
    (each agent's own wealth band times ``c0``) or a fixed wealth.
    """

    n_agents: int = 100
    m_alpha: float = 5.0
    v_alpha: float = 0.0
    m_beta: float = 10.0
    v_beta: float = 0.0
    c0: float = 1.0
    wealth_init: str | float = "uniform"
    seed: int | None = None

    def validate(self) -> "PopulationConfig":
        if int(self.n_agents) < 1:
            raise ConfigError("n_agents", "must be at least 1")
        for key in ("m_alpha", "v_alpha", "m_beta", "v_beta"):
            if not getattr(self, key) >= 0:
                raise ConfigError(key, "must be nonnegative")
        if not self.c0 > 0:
            raise ConfigError("c0", "must be positive")
        if self.wealth_init != "uniform":
            try:
                ok = float(self.wealth_init) > 0
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise ConfigError("wealth_init", "must be 'uniform' or a positive number")
        return self


@dataclass
class Population:
    alpha: np.ndarray
    beta: np.ndarray
    x0: np.ndarray
    c0: float
    bands: BandStack
    rejection_rate: float = 0.0

    def __len__(self) -> int:
        return self.alpha.size


def lognormal_parameters(mean: float, var: float) -> tuple[float, float]:
    """Log-scale location and scale matching a mean and variance."""
    s2 = math.log1p(var / mean ** 2)
    return math.log(mean) - 0.5 * s2, math.sqrt(s2)


def _draw_lognormal(rng, mean, var, n):
    if var == 0 or mean == 0:
        return np.full(n, float(mean))
    loc, scale = lognormal_parameters(mean, var)
    return rng.lognormal(loc, scale, n)


def sample_costs(cfg: PopulationConfig, delta: float, rng) -> tuple[np.ndarray, np.ndarray, float]:
    """Draw ``(alpha, beta)`` pairs, redrawing alphas with ``delta*alpha >= 1``.

    Returns the rejection rate as the third element.
    """
    n = int(cfg.n_agents)
    alphas = []
    drawn = 0
    rejected = 0
    while sum(a.size for a in alphas) < n:
        batch = _draw_lognormal(rng, cfg.m_alpha, cfg.v_alpha, n)
        drawn += batch.size
        ok = delta * batch < 1.0
        rejected += int(np.count_nonzero(~ok))
        if drawn >= 10 * n and rejected > 0.5 * drawn:
            break
        alphas.append(batch[ok])
    rate = rejected / drawn if drawn else 0.0
    if rate > 0.5:
        raise ConfigError("m_alpha", f"rejection rate {rate:.2f} above 50%; "
                          "too much mass at delta*alpha >= 1")
    alpha = np.concatenate(alphas)[:n]
    beta = _draw_lognormal(rng, cfg.m_beta, cfg.v_beta, n)
    return alpha, beta, rate


def sample_population(cfg: PopulationConfig, params: ModelParams, rng=None) -> Population:
    """Costs, bands and initial wealth for every agent.

    ``params`` supplies the market, ``gamma`` and ``delta``; its ``alpha``
    and ``beta`` are ignored.
    """
    cfg.validate()
    rng = make_rng(cfg.seed) if rng is None else rng
    alpha, beta, rate = sample_costs(cfg, params.delta, rng)
    bands = BandStack(solve(params.replace(alpha=float(a), beta=float(b)))
                      for a, b in zip(alpha, beta))
    if cfg.wealth_init == "uniform":
        u = rng.uniform(size=alpha.size)
        x0 = cfg.c0 * (bands.x_lo + u * (bands.x_hi - bands.x_lo))
    else:
        x0 = np.full(alpha.size, float(cfg.wealth_init))
    return Population(alpha=alpha, beta=beta, x0=x0, c0=cfg.c0, bands=bands,
                      rejection_rate=rate)


def population_initial_states(pop: Population) -> tuple[np.ndarray, np.ndarray]:
    """Post-jump ``(y, c)`` for every agent of the population."""
    b = pop.bands
    g = b.params.gamma
    ratio = pop.x0 / pop.c0
    c = np.where(ratio > b.x_hi, pop.x0 / b.x_hi,
                 np.where(ratio < b.x_lo, pop.x0 / b.x_lo, pop.c0))
    z = b.wealth_ratio_inverse(pop.x0 / c)
    return z * c ** (-g), c


# -- scenarios ---------------------------------------------------------------
class Scenario(str, Enum):
    BULL = "bull"
    INTERMEDIATE = "intermediate"
    BEAR = "bear"
    HIGHVOL = "highvol"


def scenario_statistics(market: MarketPath) -> tuple[float, float]:
    """Total log return and annualized realized volatility of a path."""
    lr = np.log(market.gross_returns)
    vol = float(np.std(lr, ddof=1) / math.sqrt(market.dt)) if lr.size > 1 else 0.0
    return float(lr.sum()), vol


def classify_scenario(market: MarketPath, sigma: float | None = None) -> Scenario:
    """Label a path as bull, bear, intermediate or high volatility.

    High volatility means realized volatility above 1.25 sigma; otherwise
    the total log return is compared with +-0.5 sigma sqrt(T).
    """
    sigma = market.sigma if sigma is None else sigma
    ret, vol = scenario_statistics(market)
    if vol > 1.25 * sigma:
        return Scenario.HIGHVOL
    cut = 0.5 * sigma * math.sqrt(market.horizon)
    if ret >= cut:
        return Scenario.BULL
    if ret <= -cut:
        return Scenario.BEAR
    return Scenario.INTERMEDIATE


def draw_scenario(params, scenario, horizon: float, dt: float, rng,
                  max_draws: int = 100_000) -> tuple[MarketPath, int]:
    """Draw unconditional paths until one falls in ``scenario``.

    Returns the path and the number of draws used.
    """
    scenario = Scenario(scenario)
    steps = grid_steps(horizon, dt)
    for k in range(1, max_draws + 1):
        m = market_from_shocks(params.mu, params.sigma, rng.standard_normal(steps), dt)
        if classify_scenario(m) is scenario:
            return m, k
    raise ConfigError("scenario", f"no {scenario.value} path in {max_draws} draws")


# -- least squares -----------------------------------------------------------
@dataclass(frozen=True)
class OLSResult:
    coef: np.ndarray
    se: np.ndarray
    t_stat: np.ndarray
    p_value: np.ndarray
    n: int
    dof: int
    intercept: bool

    @property
    def slope(self) -> float:
        return float(self.coef[-1])

    @property
    def slope_t(self) -> float:
        return float(self.t_stat[-1])

    @property
    def slope_p(self) -> float:
        return float(self.p_value[-1])


def ols(y, x, intercept: bool = False) -> OLSResult:
    """Least squares with classical standard errors and two-sided t p-values.

    ``x`` may be 1-D (one regressor) or 2-D (columns are regressors). With
    ``intercept`` a constant column is prepended, so the slope is last.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = y.size
    if x.shape[0] != n:
        raise DegenerateRegression("x and y lengths differ")
    if n < 3:
        raise DegenerateRegression("need at least 3 observations")
    if np.any(np.var(x, axis=0) < 1e-12):
        raise DegenerateRegression("regressor variance below 1e-12")
    design = np.column_stack([np.ones(n), x]) if intercept else x
    p = design.shape[1]
    dof = n - p
    if dof < 1:
        raise DegenerateRegression("no residual degrees of freedom")
    xtx = design.T @ design
    coef = np.linalg.solve(xtx, design.T @ y)
    resid = y - design @ coef
    s2 = float(resid @ resid) / dof
    se = np.sqrt(s2 * np.diag(np.linalg.inv(xtx)))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.sign(coef) * np.inf)
    pval = 2.0 * stats.t.sf(np.abs(t), dof)
    return OLSResult(coef=coef, se=se, t_stat=t, p_value=pval, n=n, dof=dof,
                     intercept=intercept)


# -- regression experiment ---------------------------------------------------
@dataclass(frozen=True)
class RegressionReport:
    """Pooled regression of k-year changes in log share on log wealth."""

    scenario: str
    rho_hat: float
    se: float
    t_stat: float
    p_value: float
    n_obs: int
    n_agents: int
    horizon: int
    k: int
    total_log_return: float
    realized_vol: float
    scenario_draws: int
    seed: int | None
    intercept: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def wealth_and_share_paths(pop: Population, market: MarketPath, params: ModelParams):
    """Wealth and risky holding paths, shape ``(steps + 1, n_agents)``."""
    consts = derive_constants(params.replace(alpha=0.0, beta=0.0))
    y0, c0 = population_initial_states(pop)
    b = pop.bands
    g = params.gamma
    steps = market.steps
    xs = np.empty((steps + 1, len(pop)))
    ps = np.empty_like(xs)
    y, c = y0, c0
    for j in range(steps + 1):
        if j > 0:
            y = evolve_shadow_price(y, market.shocks[j - 1], market.dt, consts)
            c, _, _ = _reflect(y, c, b.b_alpha, b.b_beta, g)
        z = y * c ** g
        xs[j] = c * b.wealth_ratio(z)
        ps[j] = c * b.portfolio_ratio(z)
    return xs, ps


def regression_panel(xs: np.ndarray, ps: np.ndarray, horizon: int, k: int,
                     per_year: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """k-year differences of log share and log wealth over yearly windows."""
    if not (1 <= k <= horizon):
        raise ConfigError("k", "need 1 <= k <= T")
    log_share = np.log(ps / xs)
    log_x = np.log(xs)
    dr, dx = [], []
    for j in range(1, horizon - k + 2):
        a = per_year * (j - 1)
        b = per_year * (j + k - 1)
        dr.append(log_share[b] - log_share[a])
        dx.append(log_x[b] - log_x[a])
    return np.concatenate(dr), np.concatenate(dx)


def run_regression_experiment(cfg: PopulationConfig, params: ModelParams, scenario,
                              horizon: int = 5, k: int = 2, seed: int | None = None,
                              market: MarketPath | None = None,
                              intercept: bool = False) -> RegressionReport:
    """Simulate a population along one scenario path and regress.

    Parameters
    ----------
    cfg : PopulationConfig
    params : ModelParams
        Market, ``gamma`` and ``delta``.
    scenario : str or Scenario
        Requested scenario; ignored for path generation when ``market`` is
        given (the label is still reported).
    horizon, k : int
        Years simulated (monthly grid) and difference length in years.
    seed : int, optional
        Master seed; defaults to ``cfg.seed``.
    market : MarketPath, optional
        Use this path instead of drawing one.
    """
    if int(horizon) != horizon or horizon < 1:
        raise ConfigError("T", "must be a positive integer number of years")
    horizon, k = int(horizon), int(k)
    seed = cfg.seed if seed is None else seed
    pop_ss, mkt_ss = np.random.SeedSequence(seed).spawn(2)
    draws = 0
    if market is None:
        market, draws = draw_scenario(params, scenario, horizon, 1.0 / 12.0, make_rng(mkt_ss))
    pop = sample_population(cfg, params, make_rng(pop_ss))
    xs, ps = wealth_and_share_paths(pop, market, params)
    dr, dx = regression_panel(xs, ps, horizon, k)
    res = ols(dr, dx, intercept=intercept)
    ret, vol = scenario_statistics(market)
    return RegressionReport(scenario=Scenario(scenario).value, rho_hat=res.slope,
                            se=float(res.se[-1]), t_stat=res.slope_t, p_value=res.slope_p,
                            n_obs=res.n, n_agents=len(pop), horizon=horizon, k=k,
                            total_log_return=ret, realized_vol=vol, scenario_draws=draws,
                            seed=seed, intercept=intercept)


# -- moments experiment ------------------------------------------------------
MOMENT_NAMES = ("mean_cg", "sd_cg", "ep", "sd_imrs", "ac1")


@dataclass(frozen=True)
class MomentReport:
    """Moments of aggregate consumption averaged over replications.

    Each moment has a Monte Carlo standard error (``se_<name>``) and the
    per-replication values are kept in ``per_rep``.
    """

    mean_cg: float
    sd_cg: float
    ep: float
    sd_imrs: float
    ac1: float
    se_mean_cg: float
    se_sd_cg: float
    se_ep: float
    se_sd_imrs: float
    se_ac1: float
    n_reps: int
    seed: int | None
    frequency: str = "monthly"
    ep_mode: str = "gross"
    low_rep: bool = False
    ac1_defined: bool = True
    per_rep: dict = field(default_factory=dict, repr=False)

    def summary(self) -> dict:
        keys = MOMENT_NAMES + tuple("se_" + k for k in MOMENT_NAMES) + (
            "n_reps", "seed", "frequency", "ep_mode", "low_rep", "ac1_defined")
        return {k: getattr(self, k) for k in keys}


def temporal_aggregate(series: np.ndarray, width: int) -> np.ndarray:
    """Sum consecutive blocks of ``width`` along the last axis."""
    series = np.asarray(series, float)
    n = series.shape[-1] // width
    return series[..., : n * width].reshape(series.shape[:-1] + (n, width)).sum(axis=-1)


def consumption_moments(ca: np.ndarray, prices: np.ndarray, delta: float, gamma: float,
                        width: int, periods_per_year: int, ep_mode: str = "gross") -> dict:
    """Moments of one aggregate consumption series.

    Parameters
    ----------
    ca : ndarray
        Cross-sectional average consumption at grid points ``t_1 .. t_n``.
    prices : ndarray
        Risky price level at ``t_0 .. t_n``.
    width : int
        Grid steps per aggregation period.
    periods_per_year : int
        Aggregation periods per year; rates are annualized with it.
    ep_mode : {"gross", "literal"}
        Return input of the premium: the gross return of the following
        period, or the ratio of consecutive gross returns.
    """
    agg = temporal_aggregate(ca, width)
    n = agg.size
    end_prices = np.asarray(prices)[::width][: n + 1]
    gross = end_prices[1:] / end_prices[:-1]
    ratio = agg[1:] / agg[:-1]
    cg = ratio - 1.0
    imrs = math.exp(-delta / periods_per_year) * ratio ** (-gamma)
    # imrs[i] spans periods i -> i+1; pair it with the return earned over i+1
    if ep_mode == "gross":
        ret = gross[1:]
    elif ep_mode == "literal":
        ret = gross[1:] / gross[:-1]
    else:
        raise ConfigError("ep_mode", "must be 'gross' or 'literal'")
    cov = float(np.mean((imrs - imrs.mean()) * (ret - ret.mean())))
    ep = -cov / float(imrs.mean())
    sd = float(np.std(cg, ddof=1))
    if sd < 1e-12 or cg.size < 3:
        ac1 = math.nan
    else:
        ac1 = float(np.corrcoef(cg[:-1], cg[1:])[0, 1])
    f = periods_per_year
    return {"mean_cg": float(cg.mean()) * f, "sd_cg": sd * math.sqrt(f), "ep": ep * f,
            "sd_imrs": float(np.std(imrs, ddof=1)) * math.sqrt(f), "ac1": ac1}


def aggregate_consumption(y0, c0, shocks, dt, constants, b_alpha, b_beta) -> np.ndarray:
    """Cross-sectional mean consumption at ``t_1 .. t_n`` for each replication.

    ``y0, c0, b_alpha, b_beta`` have shape ``(reps, n_agents)``; ``shocks``
    has shape ``(reps, steps)``.
    """
    g = constants.params.gamma
    steps = shocks.shape[-1]
    out = np.empty(shocks.shape[:-1] + (steps,))
    y, c = np.asarray(y0, float), np.asarray(c0, float)
    for j in range(steps):
        y = evolve_shadow_price(y, shocks[..., j, None], dt, constants)
        c, _, _ = _reflect(y, c, b_alpha, b_beta, g)
        out[..., j] = c.mean(axis=-1)
    return out


def run_moments_experiment(cfg: PopulationConfig, params: ModelParams, reps: int = 100,
                           seed: int | None = None, years: int = 79,
                           dt: float = 1.0 / 24.0, frequency: str = "monthly",
                           ep_mode: str = "gross") -> MomentReport:
    """Simulated moments of aggregate consumption.

    Every replication draws its own population and one shock vector shared
    by all agents, from a stream spawned off the master seed.
    """
    reps = int(reps)
    if reps < 1:
        raise ConfigError("reps", "must be at least 1")
    seed = cfg.seed if seed is None else seed
    steps = grid_steps(years, dt)
    per_month = 1.0 / (12.0 * dt)
    if abs(per_month - round(per_month)) > 1e-9 or round(per_month) < 1:
        raise ConfigError("dt", "a month must contain a whole number of steps")
    per_month = int(round(per_month))
    if frequency == "monthly":
        width, periods = per_month, 12
    elif frequency == "annual":
        width, periods = 12 * per_month, 1
    else:
        raise ConfigError("frequency", "must be 'monthly' or 'annual'")
    consts = derive_constants(params.replace(alpha=0.0, beta=0.0))
    streams = np.random.SeedSequence(seed).spawn(reps)
    n = int(cfg.n_agents)
    y0 = np.empty((reps, n))
    c0 = np.empty((reps, n))
    ba = np.empty((reps, n))
    bb = np.empty((reps, n))
    shocks = np.empty((reps, steps))
    for i, ss in enumerate(streams):
        rng = make_rng(ss)
        pop = sample_population(cfg, params, rng)
        y0[i], c0[i] = population_initial_states(pop)
        ba[i], bb[i] = pop.bands.b_alpha, pop.bands.b_beta
        shocks[i] = rng.standard_normal(steps)
    ca = aggregate_consumption(y0, c0, shocks, dt, consts, ba, bb)
    sq = math.sqrt(dt)
    log_gross = (params.mu - 0.5 * params.sigma ** 2) * dt + params.sigma * sq * shocks
    prices = np.exp(np.concatenate((np.zeros((reps, 1)), np.cumsum(log_gross, axis=1)), axis=1))
    rows = [consumption_moments(ca[i], prices[i], params.delta, params.gamma, width,
                                periods, ep_mode) for i in range(reps)]
    per_rep = {k: np.array([r[k] for r in rows]) for k in MOMENT_NAMES}
    ac1_ok = bool(np.all(np.isfinite(per_rep["ac1"])))
    means, ses = {}, {}
    for k in MOMENT_NAMES:
        v = per_rep[k]
        fin = v[np.isfinite(v)]
        means[k] = float(fin.mean()) if fin.size else math.nan
        ses[k] = float(fin.std(ddof=1) / math.sqrt(fin.size)) if fin.size > 1 else math.nan
    return MomentReport(**means, **{"se_" + k: ses[k] for k in MOMENT_NAMES}, n_reps=reps,
                        seed=seed, frequency=frequency, ep_mode=ep_mode,
                        low_rep=reps < LOW_REP_THRESHOLD, ac1_defined=ac1_ok, per_rep=per_rep)
