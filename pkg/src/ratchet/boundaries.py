"""Free-boundary solution of the consumption band.

The dual obstacle problem is solved in closed form up to one scalar
equation ``f(w) = 0`` for the ratio ``w = b_alpha / b_beta``. Everything
else (coefficients, thresholds, the RCRRA peak) follows from ``w``.

Throughout, ``z = y * c**gamma`` is the dual ratio and ``u = z / b_alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import BracketFailure, DomainError, InvariantViolation, NotApplicable
from .params import DerivedConstants, ModelParams, derive_constants
from .rootfind import safeguarded_newton

# relative slack when deciding whether z lies in the closed band
BAND_SLACK = 1e-10


def f_eval(w: float, constants: DerivedConstants) -> float:
    """Free-boundary residual f(w).

    Parameters
    ----------
    w : float
        Candidate ratio ``b_alpha / b_beta`` in (0, 1).
    constants : DerivedConstants

    Returns
    -------
    float
    """
    if not 0.0 < w < 1.0:
        raise DomainError(f"w = {w!r} must lie in (0, 1)")
    m1, m2, k = constants.m1, constants.m2, constants.kappa
    wm1 = w ** m1
    return ((m1 - 1) * m2 * (1 - w ** (1 - m2)) * (wm1 - k)
            - m1 * (m2 - 1) * (wm1 - w) * (1 - k * w ** (-m2)))


def f_prime(w: float, constants: DerivedConstants) -> float:
    """Derivative of ``f_eval`` with respect to ``w``."""
    m1, m2, k = constants.m1, constants.m2, constants.kappa
    wm1 = w ** m1
    a = (m1 - 1) * m2 * (-(1 - m2) * w ** (-m2) * (wm1 - k)
                         + (1 - w ** (1 - m2)) * m1 * w ** (m1 - 1))
    b = m1 * (m2 - 1) * ((m1 * w ** (m1 - 1) - 1) * (1 - k * w ** (-m2))
                         + (wm1 - w) * k * m2 * w ** (-m2 - 1))
    return a - b


def solve_w(constants: DerivedConstants) -> float:
    """Unique root of ``f`` on ``(0, kappa)``.

    ``f`` is positive near zero, negative at ``kappa`` and convex in between,
    so a bracket always exists; the lower end is pushed toward zero until the
    sign is confirmed.
    """
    p = constants.params
    if p.is_frictionless or constants.kappa >= 1.0:
        raise NotApplicable("frictionless case has no free boundary")
    k = constants.kappa
    hi = k
    f_hi = f_eval(hi, constants)
    if not f_hi < 0:
        raise BracketFailure("f(kappa) is not negative", hi, hi, f_hi, f_hi)
    lo = 0.5 * k
    f_lo = f_eval(lo, constants)
    while f_lo <= 0:
        lo *= 1e-3
        if lo < 1e-290:
            raise BracketFailure("no positive value of f near zero", lo, hi, f_lo, f_hi)
        f_lo = f_eval(lo, constants)
    w = safeguarded_newton(lambda x: f_eval(x, constants), lo, hi,
                           fprime=lambda x: f_prime(x, constants), xtol=0.0, rtol=4e-16)
    return w


def _coefficients_alpha_side(c: DerivedConstants, b_alpha: float) -> tuple[float, float]:
    p = c.params
    m1, m2 = c.m1, c.m2
    lead = p.alpha - 1.0 / p.delta
    d1 = (lead * m2 + (m2 - 1) * b_alpha / p.r) / (m2 - m1)
    d2 = (lead * m1 + (m1 - 1) * b_alpha / p.r) / (m1 - m2)
    return d1, d2


def _coefficients_beta_side(c: DerivedConstants, b_alpha: float,
                            b_beta: float) -> tuple[float, float, float]:
    """D1, D2 from the upper-edge conditions, plus ``D1 * w**(-m1)``."""
    p = c.params
    m1, m2 = c.m1, c.m2
    lead = -(p.beta + 1.0 / p.delta)
    ratio = b_alpha / b_beta
    d1_upper = (lead * m2 + (m2 - 1) * b_beta / p.r) / (m2 - m1)
    # the cross-check D2 may overflow for very wide bands; report inf then
    with np.errstate(over="ignore", invalid="ignore"):
        scale = float(np.power(ratio, m2))
    d2 = (lead * m1 + (m1 - 1) * b_beta / p.r) / (m1 - m2) * scale
    return d1_upper * ratio ** m1, d2, d1_upper


@dataclass(frozen=True)
class FreeBoundaries:
    """Solved band constants with evaluators.

    Attributes
    ----------
    w : float
        ``b_alpha / b_beta``.
    b_alpha, b_beta : float
        Lower and upper edges of the band in the dual ratio z.
    d1, d2 : float
        Coefficients of the homogeneous solution, D1 from the upper-edge
        conditions and D2 from the lower-edge ones.
    b_m : float
        Minimizer of ``H'`` inside the band.
    x_lo, x_hi : float
        Wealth-to-consumption thresholds (``x_lo`` at ``b_beta``).
    b_hat, x_hat, rcrra_max : float
        Location and value of the RCRRA peak.
    d1_alt, d2_alt : float
        The same coefficients from the opposite edge (cross-check).
    d1_upper : float
        ``D1 * w**(-m1)``, the D1 term anchored at ``b_beta``. Evaluators
        use it so that no power of z/b_alpha above one is ever formed.
    """

    params: ModelParams
    constants: DerivedConstants = field(repr=False)
    w: float
    b_alpha: float
    b_beta: float
    d1: float
    d2: float
    b_m: float
    x_lo: float = math.nan
    x_hi: float = math.nan
    b_hat: float = math.nan
    x_hat: float = math.nan
    rcrra_max: float = math.nan
    d1_alt: float = math.nan
    d2_alt: float = math.nan
    d1_upper: float = math.nan

    frictionless = False

    # -- helpers -----------------------------------------------------------
    def _check_band(self, z):
        z = np.asarray(z, dtype=float)
        lo = self.b_alpha * (1 - BAND_SLACK)
        hi = self.b_beta * (1 + BAND_SLACK)
        if np.any(~((z >= lo) & (z <= hi))):
            raise DomainError(f"z outside the band [{self.b_alpha:.6g}, {self.b_beta:.6g}]")
        return z

    def _terms(self, z, p1: int, p2: int):
        """Return ``D1 u**(m1-p1)`` and ``D2 u**(m2-p2)`` for ``u = z/b_alpha``.

        Each term is anchored at the edge where it is largest, so both
        powers stay in (0, 1] across the band.
        """
        c = self.constants
        t1 = self.d1_upper * self.w ** p1 * (z / self.b_beta) ** (c.m1 - p1)
        t2 = self.d2 * (z / self.b_alpha) ** (c.m2 - p2)
        return t1, t2

    # -- obstacle function ---------------------------------------------------
    def h_eval(self, z):
        """Value of the obstacle solution H(z)."""
        z = np.asarray(z, dtype=float)
        if np.any(~(z > 0)):
            raise DomainError("z must be positive")
        p = self.params
        zc = np.clip(z, self.b_alpha, self.b_beta)
        t1, t2 = self._terms(zc, 0, 0)
        inner = t1 + t2 + 1.0 / p.delta - zc / p.r
        out = np.where(z < self.b_alpha, p.alpha, np.where(z > self.b_beta, -p.beta, inner))
        return _out(out)

    def h_prime(self, z):
        """First derivative of H; zero outside the closed band."""
        z = np.asarray(z, dtype=float)
        if np.any(~(z > 0)):
            raise DomainError("z must be positive")
        c = self.constants
        zc = np.clip(z, self.b_alpha, self.b_beta)
        t1, t2 = self._terms(zc, 1, 1)
        inner = (c.m1 * t1 + c.m2 * t2) / self.b_alpha - 1.0 / self.params.r
        out = np.where((z < self.b_alpha) | (z > self.b_beta), 0.0, inner)
        return _out(out)

    def h_second(self, z):
        """Second derivative of H inside the band."""
        z = self._check_band(z)
        c = self.constants
        t1, t2 = self._terms(z, 2, 2)
        return _out((c.m1 * (c.m1 - 1) * t1 + c.m2 * (c.m2 - 1) * t2)
                    / self.b_alpha ** 2)

    # -- wealth and portfolio per unit of consumption ----------------------
    def wealth_ratio(self, z):
        """Wealth-to-consumption ratio X/c at dual ratio z."""
        z = self._check_band(z)
        c = self.constants
        t1, t2 = self._terms(z, 1, 1)
        s = (c.m1 / c.e1 * t1 + c.m2 / c.e2 * t2) / self.b_alpha
        return _out(1.0 / self.params.r - s)

    def wealth_ratio_dz(self, z):
        """Derivative of ``wealth_ratio`` in z."""
        z = self._check_band(z)
        c = self.constants
        t1, t2 = self._terms(z, 2, 2)
        return _out(-(c.m1 * (c.m1 - 1) / c.e1 * t1
                      + c.m2 * (c.m2 - 1) / c.e2 * t2) / self.b_alpha ** 2)

    def portfolio_ratio(self, z):
        """Risky dollar holding per unit of consumption, pi/c."""
        z = self._check_band(z)
        c = self.constants
        t1, t2 = self._terms(z, 1, 1)
        s = (c.m1 * (c.m1 - 1) / c.e1 * t1
             + c.m2 * (c.m2 - 1) / c.e2 * t2) / self.b_alpha
        p = self.params
        return _out(c.theta / p.sigma * s)

    def share(self, z):
        """Risky share of wealth pi/X."""
        return _out(np.asarray(self.portfolio_ratio(z)) / np.asarray(self.wealth_ratio(z)))

    def rcrra_z(self, z):
        """Revealed relative risk aversion at dual ratio z."""
        p = self.params
        return _out((p.mu - p.r) / p.sigma ** 2 / np.asarray(self.share(z)))

    def wealth_map(self, y, c):
        """Wealth X for shadow price y and consumption c inside the band."""
        y = np.asarray(y, dtype=float)
        c = np.asarray(c, dtype=float)
        if np.any(~(y > 0)) or np.any(~(c > 0)):
            raise DomainError("y and c must be positive")
        z = y * c ** self.params.gamma
        return _out(c * np.asarray(self.wealth_ratio(z)))

    def wealth_ratio_inverse(self, x, iterations: int = 80):
        """Dual ratio z with ``wealth_ratio(z) = x`` (vectorized bisection).

        ``x`` must lie in ``[x_lo, x_hi]``; the map is decreasing in z.
        """
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * self.x_hi
        if np.any((x < self.x_lo - tol) | (x > self.x_hi + tol)):
            raise DomainError("wealth ratio outside [x_lo, x_hi]")
        lo = np.full(x.shape, math.log(self.b_alpha))
        hi = np.full(x.shape, math.log(self.b_beta))
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            above = np.asarray(self.wealth_ratio(np.exp(mid))) > x
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return _out(np.exp(0.5 * (lo + hi)))

    def z_from_s(self, s):
        """Map the band coordinate s in [0, 1] to z."""
        s = np.asarray(s, dtype=float)
        if np.any((s < 0) | (s > 1)):
            raise DomainError("s must lie in [0, 1]")
        return _out(self.b_alpha + s * (self.b_beta - self.b_alpha))

    # -- RCRRA peak ----------------------------------------------------------
    def g_eval(self, y: float) -> float:
        """Function whose unique band root locates the RCRRA peak."""
        u = y / self.b_alpha
        return self.g_scaled(y) * u ** (-self.constants.m2)

    def g_scaled(self, y: float) -> float:
        """``g_eval(y) * u**m2``: same sign and root, bounded on the band."""
        c = self.constants
        p = self.params
        m1, m2, e1, e2 = c.m1, c.m2, c.e1, c.e2
        a, b = self._terms(y, 0, 0)
        u = y / self.b_alpha
        return (m1 * (m1 - 1) ** 2 / (p.r * e1) * a
                - m1 * m2 * (m1 - m2) ** 2 / (e1 * e2 * self.b_alpha) * a * b / u
                + m2 * (m2 - 1) ** 2 / (p.r * e2) * b)

    def to_dict(self) -> dict:
        keys = ("w", "b_alpha", "b_beta", "d1", "d2", "b_m", "x_lo", "x_hi",
                "b_hat", "x_hat", "rcrra_max")
        return {k: getattr(self, k) for k in keys}


@dataclass(frozen=True)
class MertonBand:
    """Frictionless case: the band collapses to the single point z = 1.

    Exposes the same evaluators as ``FreeBoundaries`` so downstream code
    needs no special casing beyond the value function.
    """

    params: ModelParams
    constants: DerivedConstants = field(repr=False)
    b_alpha: float = 1.0
    b_beta: float = 1.0
    x_lo: float = math.nan
    x_hi: float = math.nan
    b_hat: float = 1.0
    x_hat: float = math.nan
    rcrra_max: float = math.nan

    frictionless = True

    def _check_band(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z - 1.0) > BAND_SLACK):
            raise DomainError("frictionless band is the single point z = 1")
        return z

    def wealth_ratio(self, z):
        z = self._check_band(z)
        return _out(np.full(z.shape, 1.0 / self.constants.big_k))

    def portfolio_ratio(self, z):
        z = self._check_band(z)
        share = (self.params.mu - self.params.r) / (self.params.gamma * self.params.sigma ** 2)
        return _out(np.full(z.shape, share / self.constants.big_k))

    def share(self, z):
        return _out(np.asarray(self.portfolio_ratio(z)) / np.asarray(self.wealth_ratio(z)))

    def rcrra_z(self, z):
        z = self._check_band(z)
        return _out(np.full(z.shape, float(self.params.gamma)))

    def wealth_map(self, y, c):
        y = np.asarray(y, dtype=float)
        c = np.asarray(c, dtype=float)
        return _out(c * np.asarray(self.wealth_ratio(y * c ** self.params.gamma)))

    def wealth_ratio_inverse(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.ones(x.shape))

    def z_from_s(self, s):
        s = np.asarray(s, dtype=float)
        return _out(np.ones(s.shape))

    def to_dict(self) -> dict:
        keys = ("b_alpha", "b_beta", "x_lo", "x_hi", "b_hat", "x_hat", "rcrra_max")
        return {k: getattr(self, k) for k in keys}


def _out(arr):
    arr = np.asarray(arr)
    return float(arr) if arr.ndim == 0 else arr


def compute_boundaries(params: ModelParams, constants: DerivedConstants,
                       w: float) -> FreeBoundaries:
    """Build the band constants from a solved ``w``.

    Raises
    ------
    InvariantViolation
        If a structural inequality fails, which points at a bad ``w``.
    """
    p = params
    c = constants
    m1, m2, k = c.m1, c.m2, c.kappa
    b_alpha = (1 - p.delta * p.alpha) * (m1 - 1) / m1 * (w ** m1 / k - 1) / (w ** (m1 - 1) - 1)
    b_beta = b_alpha / w
    # each system loses D_i to cancellation where the other keeps it: the
    # upper-edge D1 carries w**m1 as a factor, the lower-edge D2 has no
    # offsetting terms. Take each from its stable side, keep the other.
    d1_alt, d2 = _coefficients_alpha_side(c, b_alpha)
    d1, d2_alt, d1_upper = _coefficients_beta_side(c, b_alpha, b_beta)
    checks = [
        (0 < b_alpha < 1 - p.delta * p.alpha, "0 < b_alpha < 1 - delta*alpha"),
        (b_beta > 1 + p.delta * p.beta, "b_beta > 1 + delta*beta"),
        (d1_upper > 0, "D1 > 0"),
        (d2 < 0, "D2 < 0"),
    ]
    for ok, what in checks:
        if not ok:
            raise InvariantViolation(f"{what} fails (w={w:.6g}, b_alpha={b_alpha:.6g}, "
                                     f"b_beta={b_beta:.6g}, D1={d1:.6g}, D2={d2:.6g})")
    # in logs, since D1 itself may underflow
    log_ratio = (math.log(-d2 * m2 * (m2 - 1)) - math.log(d1_upper * m1 * (m1 - 1))
                 - m1 * math.log(w))
    b_m = b_alpha * math.exp(log_ratio / (m1 - m2))
    if not b_alpha < b_m < b_beta:
        raise InvariantViolation(f"b_m = {b_m:.6g} outside the band")
    fb = FreeBoundaries(params=p, constants=c, w=w, b_alpha=b_alpha, b_beta=b_beta,
                        d1=d1, d2=d2, b_m=b_m, d1_alt=d1_alt, d2_alt=d2_alt,
                        d1_upper=d1_upper)
    x_lo = fb.wealth_ratio(b_beta)
    x_hi = fb.wealth_ratio(b_alpha)
    if not 0 < x_lo < x_hi:
        raise InvariantViolation(f"thresholds out of order: x_lo={x_lo:.6g}, x_hi={x_hi:.6g}")
    fb = _with(fb, x_lo=x_lo, x_hi=x_hi)
    b_hat, x_hat, rmax = solve_b_hat(fb)
    return _with(fb, b_hat=b_hat, x_hat=x_hat, rcrra_max=rmax)


def _with(fb, **changes):
    return replace(fb, **changes)


def solve_b_hat(fb: FreeBoundaries) -> tuple[float, float, float]:
    """Locate the RCRRA peak inside the band.

    Returns
    -------
    (b_hat, x_hat, rcrra_max)
    """
    g = fb.g_scaled
    lo, hi = fb.b_alpha, fb.b_beta
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo < 0 < g_hi):
        raise BracketFailure("G does not change sign across the band", lo, hi, g_lo, g_hi)
    # the scaled G has the same unique sign change as G; solve in log z
    lz = safeguarded_newton(lambda t: g(math.exp(t)), math.log(lo), math.log(hi),
                            xtol=0.0, rtol=4e-16)
    b_hat = math.exp(lz)
    return b_hat, float(fb.wealth_ratio(b_hat)), float(fb.rcrra_z(b_hat))


@lru_cache(maxsize=4096)
def solve(params: ModelParams):
    """Solve the band for ``params``.

    Returns a ``FreeBoundaries`` or, when ``alpha = beta = 0``, a
    ``MertonBand``. Results are cached per parameter set.
    """
    c = derive_constants(params)
    if params.is_frictionless:
        x = 1.0 / c.big_k
        return MertonBand(params=params, constants=c, x_lo=x, x_hi=x, x_hat=x,
                          rcrra_max=float(params.gamma))
    w = solve_w(c)
    return compute_boundaries(params, c, w)


def calibrate_beta(params: ModelParams, target: float = 13.0, beta_lo: float = 1e-3,
                   beta_hi: float = 1e7, rtol: float = 1e-6) -> float:
    """Find the beta at which the RCRRA peak equals ``target``.

    Holds every other primitive fixed; the peak increases with beta, so a
    bisection in log beta suffices.
    """
    def gap(lb: float) -> float:
        return solve(params.replace(beta=math.exp(lb))).rcrra_max - target

    lb = safeguarded_newton(gap, math.log(beta_lo), math.log(beta_hi), xtol=rtol)
    return math.exp(lb)


class BandStack:
    """Per-agent band constants stacked into arrays for vectorized evaluation.

    All bands must share the market, ``gamma`` and ``delta`` (hence ``m1``,
    ``m2``); only ``alpha`` and ``beta`` may differ. Frictionless members
    are handled through a mask.
    """

    def __init__(self, bands):
        bands = list(bands)
        if not bands:
            raise ValueError("empty band list")
        c0 = bands[0].constants
        for b in bands:
            k = b.constants
            if (k.m1, k.m2, b.params.gamma) != (c0.m1, c0.m2, bands[0].params.gamma):
                raise ValueError("bands differ in market or preference primitives")
        self.constants = c0
        self.params = bands[0].params
        self.merton = np.array([b.frictionless for b in bands])
        self.b_alpha = np.array([b.b_alpha for b in bands])
        self.b_beta = np.array([b.b_beta for b in bands])
        self.w = np.array([1.0 if b.frictionless else b.w for b in bands])
        self.d1_upper = np.array([0.0 if b.frictionless else b.d1_upper for b in bands])
        self.d2 = np.array([0.0 if b.frictionless else b.d2 for b in bands])
        self.x_lo = np.array([b.x_lo for b in bands])
        self.x_hi = np.array([b.x_hi for b in bands])

    def __len__(self) -> int:
        return self.b_alpha.size

    def _sums(self, z, weight1, weight2):
        c = self.constants
        zc = np.clip(z, self.b_alpha, self.b_beta)
        t1 = self.d1_upper * self.w * (zc / self.b_beta) ** (c.m1 - 1)
        t2 = self.d2 * (zc / self.b_alpha) ** (c.m2 - 1)
        return (weight1 * t1 + weight2 * t2) / self.b_alpha

    def wealth_ratio(self, z):
        """X/c; ``z`` broadcasts against the agent axis (last)."""
        c = self.constants
        band = 1.0 / self.params.r - self._sums(z, c.m1 / c.e1, c.m2 / c.e2)
        return np.where(self.merton, 1.0 / c.big_k, band)

    def portfolio_ratio(self, z):
        """pi/c on the same broadcasting convention."""
        c = self.constants
        p = self.params
        w1 = c.m1 * (c.m1 - 1) / c.e1
        w2 = c.m2 * (c.m2 - 1) / c.e2
        band = c.theta / p.sigma * self._sums(z, w1, w2)
        share = (p.mu - p.r) / (p.gamma * p.sigma ** 2)
        return np.where(self.merton, share / c.big_k, band)

    def wealth_ratio_inverse(self, x, iterations: int = 80):
        """Per-agent z solving ``wealth_ratio(z) = x`` (x clipped to the band)."""
        x = np.clip(np.asarray(x, float), self.x_lo, self.x_hi)
        lo = np.log(self.b_alpha) + np.zeros_like(x)
        hi = np.log(self.b_beta) + np.zeros_like(x)
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            above = self.wealth_ratio(np.exp(mid)) > x
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return np.where(self.merton, 1.0, np.exp(0.5 * (lo + hi)))
