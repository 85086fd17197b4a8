import math

import numpy as np
import pytest

from ratchet import (AssumptionViolation, DomainError, FreeBoundaries, MertonBand, ModelParams,
                     NotApplicable, derive_constants, solve)
from ratchet.boundaries import (BandStack, calibrate_beta, compute_boundaries, f_eval, f_prime,
                                solve_w)
from ratchet.errors import InvariantViolation
from ratchet.rootfind import bisect

from conftest import MARKET

# Frozen at 12 significant digits from two independent oracles: a 50-digit
# mpmath root of f and 200 plain bisection steps in double precision.
GOLDEN = {
    (2.0, 5.0, 100.0): (0.0309189950138, 0.302395482336, 9.78024939687),
    (2.0, 5.0, 10.0): (0.140391097722, 0.414261831972, 2.95076994691),
}
# 50-digit oracle for a large-m1 case (low price of risk) where the two
# coefficient derivations differ wildly in floating point
STIFF = ModelParams(r=0.05249878337261737, mu=0.09066706047962636, sigma=0.4410159538546402,
                    delta=0.025344196921781158, gamma=5.622901744594067,
                    alpha=26.50172935681877, beta=610.4997228552768)
STIFF_D1, STIFF_D2 = 6.834858183e-18, -7.395613127


def random_params(n, seed=11):
    """Valid parameter sets with at least one positive cost."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        r = rng.uniform(0.005, 0.06)
        d = rng.uniform(0.005, 0.08)
        g = rng.uniform(0.5, 10.0)
        if abs(g - 1) < 0.05:
            continue
        p = ModelParams(r=r, mu=r + rng.uniform(0.02, 0.12), sigma=rng.uniform(0.1, 0.5),
                        delta=d, gamma=g, alpha=rng.uniform(0, 0.95) / d * rng.integers(0, 2),
                        beta=10 ** rng.uniform(-1, 3))
        try:
            p.validate()
        except AssumptionViolation:
            continue
        out.append(p)
    return out


@pytest.mark.parametrize("costs, golden", GOLDEN.items())
def test_golden_band(costs, golden):
    g, a, b = costs
    fb = solve(ModelParams(**MARKET, gamma=g, alpha=a, beta=b))
    for got, ref in zip((fb.w, fb.b_alpha, fb.b_beta), golden):
        assert got == pytest.approx(ref, rel=1e-11)


def test_w_agrees_with_bisection(wide_params):
    c = derive_constants(wide_params)
    oracle = bisect(lambda w: f_eval(w, c), 1e-12, c.kappa, iterations=200)
    w = solve_w(c)
    assert w == pytest.approx(oracle, rel=1e-13)
    assert abs(f_eval(w, c)) < 1e-11
    assert 0 < w < c.kappa < 1


def test_f_bracket_signs(wide_params):
    c = derive_constants(wide_params)
    assert f_eval(1e-8, c) > 0
    assert f_eval(c.kappa - 1e-8, c) < 0
    assert f_eval(c.kappa, c) < 0
    limit = (c.m1 - 1) * c.m2 * (-c.kappa)
    assert f_eval(1e-12, c) == pytest.approx(limit, rel=1e-4)


def test_f_prime_matches_difference(wide_params):
    c = derive_constants(wide_params)
    for w in (0.01, 0.1, 0.25):
        h = 1e-7 * w
        num = (f_eval(w + h, c) - f_eval(w - h, c)) / (2 * h)
        assert f_prime(w, c) == pytest.approx(num, rel=1e-6)


@pytest.mark.parametrize("w", [0.0, 1.0, -0.5, 2.0])
def test_f_domain(wide_params, w):
    with pytest.raises(DomainError):
        f_eval(w, derive_constants(wide_params))


def test_frictionless_has_no_free_boundary():
    p = ModelParams(**MARKET, gamma=2.0)
    with pytest.raises(NotApplicable):
        solve_w(derive_constants(p))
    band = solve(p)
    assert isinstance(band, MertonBand) and band.frictionless
    assert band.x_lo == band.x_hi == pytest.approx(1 / derive_constants(p).big_k)


def test_structural_inequalities(wide_band):
    fb, p = wide_band, wide_band.params
    assert isinstance(fb, FreeBoundaries)
    assert 0 < fb.b_alpha < 1 - p.delta * p.alpha
    assert fb.b_beta > 1 + p.delta * p.beta
    assert fb.d1 > 0 > fb.d2
    assert fb.b_alpha < fb.b_m < fb.b_beta
    assert fb.b_alpha < fb.b_hat < fb.b_beta
    assert fb.x_lo < fb.x_hat < fb.x_hi
    assert fb.rcrra_max >= p.gamma


def test_smooth_pasting_random_sets():
    worst = 0.0
    for p in random_params(500):
        fb = solve(p)
        res = (abs(fb.h_eval(fb.b_alpha) - p.alpha), abs(fb.h_prime(fb.b_alpha)),
               abs(fb.h_eval(fb.b_beta) + p.beta), abs(fb.h_prime(fb.b_beta)))
        worst = max(worst, *res)
    assert worst < 1e-9


def hjb_residual(fb, z):
    p, th = fb.params, fb.constants.theta
    return (0.5 * th ** 2 * z ** 2 * fb.h_second(z) + (p.delta - p.r) * z * fb.h_prime(z)
            - p.delta * fb.h_eval(z) + 1 - z)


def test_hjb_residual_on_band(wide_band):
    z = np.geomspace(wide_band.b_alpha, wide_band.b_beta, 102)[1:-1]
    assert np.max(np.abs(hjb_residual(wide_band, z))) < 1e-8


def test_hjb_residual_random_sets():
    for p in random_params(50, seed=5):
        fb = solve(p)
        z = np.geomspace(fb.b_alpha, fb.b_beta, 102)[1:-1]
        assert np.max(np.abs(hjb_residual(fb, z))) < 1e-8, p


def test_obstacle_inequalities(wide_band):
    fb, p = wide_band, wide_band.params
    below = np.linspace(1e-6, fb.b_alpha, 50)
    above = np.linspace(fb.b_beta, 10 * fb.b_beta, 50)
    assert np.all(1 - p.delta * p.alpha - below >= 0)
    assert np.all(1 + p.delta * p.beta - above <= 0)
    # H stays between the two obstacles and decreases strictly inside
    z = np.geomspace(fb.b_alpha, fb.b_beta, 200)[1:-1]
    h = fb.h_eval(z)
    assert np.all((h < p.alpha) & (h > -p.beta))
    assert np.all(fb.h_prime(z) < 0)


def test_h_outside_band(wide_band):
    fb = wide_band
    assert fb.h_eval(fb.b_alpha / 2) == fb.params.alpha
    assert fb.h_eval(2 * fb.b_beta) == -fb.params.beta
    assert fb.h_prime(fb.b_alpha / 2) == 0.0 and fb.h_prime(2 * fb.b_beta) == 0.0
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            fb.h_eval(bad)
        with pytest.raises(DomainError):
            fb.h_prime(bad)


def test_coefficient_derivations_agree(wide_band):
    assert wide_band.d1_alt == pytest.approx(wide_band.d1, rel=1e-8)
    assert wide_band.d2_alt == pytest.approx(wide_band.d2, rel=1e-8)


def cancellation(a, b):
    """Digits-lost factor of the sum a + b."""
    return (abs(a) + abs(b)) / abs(a + b)


def test_coefficient_derivations_agree_random_sets():
    # the cross-check formulas subtract nearly equal terms in parts of the
    # parameter space; compare only where they keep enough digits
    checked = 0
    for p in random_params(300, seed=3):
        fb = solve(p)
        c = fb.constants
        lower = cancellation((p.alpha - 1 / p.delta) * c.m2, (c.m2 - 1) * fb.b_alpha / p.r)
        upper = cancellation(-(p.beta + 1 / p.delta) * c.m1, (c.m1 - 1) * fb.b_beta / p.r)
        if max(lower, upper) > 1e5:
            continue
        checked += 1
        assert fb.d1_alt == pytest.approx(fb.d1, rel=1e-8), p
        assert fb.d2_alt == pytest.approx(fb.d2, rel=1e-8), p
    assert checked > 200


def test_stable_coefficients_large_m1():
    fb = solve(STIFF)
    assert fb.constants.m1 > 8
    assert fb.d1 == pytest.approx(STIFF_D1, rel=1e-8)
    assert fb.d2 == pytest.approx(STIFF_D2, rel=1e-8)
    z = np.geomspace(fb.b_alpha, fb.b_beta, 102)[1:-1]
    assert np.max(np.abs(hjb_residual(fb, z))) < 1e-8


def test_extreme_price_of_risk_solves():
    # theta near 0.014 gives m2 below -500 and w**m2 overflows; the
    # evaluators must never form that power
    p = ModelParams(r=0.007106110408600775, mu=0.01393625420523353, sigma=0.48467351288822874,
                    delta=0.061555403897894344, gamma=9.035369904708041,
                    alpha=7.236945063427303, beta=870.2286411285085)
    fb = solve(p)
    assert fb.constants.m2 < -500 and math.isinf(fb.d2_alt)
    assert 0 < fb.x_lo < fb.x_hat < fb.x_hi
    assert abs(fb.h_eval(fb.b_beta) + p.beta) < 1e-9
    assert fb.rcrra_max >= p.gamma


def test_b_m_minimizes_h_prime(wide_band):
    fb = wide_band
    left = 0.5 * (fb.b_alpha + fb.b_m)
    right = 0.5 * (fb.b_m + fb.b_beta)
    assert fb.h_prime(fb.b_m) < fb.h_prime(left)
    assert fb.h_prime(fb.b_m) < fb.h_prime(right)
    z = np.geomspace(fb.b_alpha, fb.b_beta, 2001)
    assert np.all(fb.h_prime(z) >= fb.h_prime(fb.b_m) - 1e-12)
    assert abs(fb.h_second(fb.b_m)) < 1e-10


def test_wealth_map_thresholds_and_homogeneity(wide_band):
    fb = wide_band
    g = fb.params.gamma
    for c in (0.5, 1.0, 3.0):
        assert fb.wealth_map(c ** -g * fb.b_beta, c) / c == pytest.approx(fb.x_lo, rel=1e-12)
        assert fb.wealth_map(c ** -g * fb.b_alpha, c) / c == pytest.approx(fb.x_hi, rel=1e-12)
    y, c = 2.0, 0.9
    for lam in (0.5, 2.0):
        assert fb.wealth_map(y * lam ** -g, c * lam) == pytest.approx(lam * fb.wealth_map(y, c),
                                                                      rel=1e-12)


def test_wealth_map_decreasing_in_y(wide_band):
    fb = wide_band
    c = 1.7
    g = fb.params.gamma
    y = np.geomspace(c ** -g * fb.b_alpha, c ** -g * fb.b_beta, 500)
    x = fb.wealth_map(y, c)
    assert np.all(np.diff(x) < 0)
    assert np.all(fb.wealth_ratio_dz(y * c ** g) < 0)


def test_wealth_map_domain(wide_band):
    fb = wide_band
    with pytest.raises(DomainError):
        fb.wealth_map(0.5 * fb.b_alpha, 1.0)
    with pytest.raises(DomainError):
        fb.wealth_map(2 * fb.b_beta, 1.0)
    with pytest.raises(DomainError):
        fb.wealth_map(1.0, -1.0)


def test_wealth_ratio_inverse_round_trip(wide_band):
    fb = wide_band
    x = np.linspace(fb.x_lo, fb.x_hi, 40)
    z = fb.wealth_ratio_inverse(x)
    assert np.allclose(fb.wealth_ratio(z), x, rtol=1e-12)
    with pytest.raises(DomainError):
        fb.wealth_ratio_inverse(fb.x_hi * 1.01)


def test_peak_location(wide_band):
    fb = wide_band
    assert abs(fb.g_eval(fb.b_hat)) < 1e-10
    assert fb.g_eval(fb.b_alpha) < 0 < fb.g_eval(fb.b_beta)
    assert fb.x_hat == pytest.approx(fb.wealth_map(fb.b_hat, 1.0), rel=1e-14)
    z = np.geomspace(fb.b_alpha, fb.b_beta, 4001)
    assert np.max(fb.rcrra_z(z)) <= fb.rcrra_max * (1 + 1e-12)


def test_beta_sweep_monotone():
    base = ModelParams(**MARKET, gamma=2.0, alpha=5.0)
    betas = [0.1, 1, 10, 100, 1000, 1e4]
    bands = [solve(base.replace(beta=b)) for b in betas]
    kappa = [b.constants.kappa for b in bands]
    assert np.all(np.diff(kappa) < 0)
    assert np.all(np.diff([b.w for b in bands]) < 0)
    assert np.all(np.diff([b.b_beta for b in bands]) > 0)
    assert np.all(np.diff([b.x_lo for b in bands]) < 0)
    assert np.all(np.diff([b.x_hi for b in bands]) > 0)
    assert np.all(np.diff([b.rcrra_max for b in bands]) > 0)


def test_band_collapses_toward_merton():
    base = ModelParams(**MARKET, gamma=2.0)
    merton_ratio = 1 / derive_constants(base).big_k
    widths = []
    for eps in (1e-3, 1e-4, 1e-5):
        fb = solve(base.replace(alpha=eps, beta=eps))
        assert fb.x_lo < merton_ratio < fb.x_hi
        widths.append(fb.x_hi / fb.x_lo - 1)
    assert widths[1] < 0.03
    # the band width scales like the cube root of the cost
    for a, b in zip(widths, widths[1:]):
        assert a / b == pytest.approx(10 ** (1 / 3), rel=0.05)


def test_invariant_violation_on_bad_w(wide_params):
    c = derive_constants(wide_params)
    with pytest.raises(InvariantViolation):
        compute_boundaries(wide_params, c, 0.9 * c.kappa)


def test_solve_is_cached(wide_params):
    assert solve(wide_params) is solve(ModelParams(**wide_params.to_dict()))


def test_calibrate_beta_round_trip():
    p = ModelParams(**MARKET, gamma=1.5, alpha=49.0)
    beta = calibrate_beta(p, target=13.0)
    assert solve(p.replace(beta=beta)).rcrra_max == pytest.approx(13.0, rel=1e-5)


def test_band_stack_matches_single_bands():
    base = ModelParams(**MARKET, gamma=1.5)
    bands = [solve(base.replace(alpha=a, beta=b)) for a, b in ((5, 50), (10, 100), (0, 0))]
    stack = BandStack(bands)
    x = np.array([40.0, 55.0, 1 / derive_constants(base).big_k])
    z = stack.wealth_ratio_inverse(x)
    assert np.allclose(stack.wealth_ratio(z), x, rtol=1e-12)
    for i, fb in enumerate(bands[:2]):
        assert stack.wealth_ratio(z)[i] == pytest.approx(fb.wealth_ratio(z[i]), rel=1e-13)
        assert stack.portfolio_ratio(z)[i] == pytest.approx(fb.portfolio_ratio(z[i]), rel=1e-13)
    assert stack.portfolio_ratio(z)[2] == pytest.approx(
        bands[2].portfolio_ratio(1.0), rel=1e-13)
    with pytest.raises(ValueError):
        BandStack([bands[0], solve(base.replace(gamma=3.0, alpha=5, beta=50))])
