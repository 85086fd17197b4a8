import numpy as np
import pytest

from ratchet import DomainError, ModelParams, merton_share, solve
from ratchet.params import crra_utility
from ratchet.policy import (Region, agent_state, band_curves, initial_multiplier_direct, j_eval,
                            j_y, j_yy, merton_value, portfolio_pi, primal_value, rcrra,
                            reflected_consumption, region_of, solve_initial_multiplier)

from conftest import MARKET

# x0 = 50, c0 = 1 with gamma = 2, alpha = 5, beta = 10: frozen from a
# 50-digit mpmath inversion of the wealth map
GOLDEN_Y_STAR = 0.573146785147926


def nr_points(fb, c=1.0, n=50):
    g = fb.params.gamma
    z = np.geomspace(fb.b_alpha, fb.b_beta, n + 2)[1:-1]
    return z * c ** -g


def test_region_classification(base_band):
    fb = base_band
    g = fb.params.gamma
    c = 1.3
    assert region_of(fb, 0.5 * fb.b_alpha * c ** -g, c) is Region.IR
    assert region_of(fb, fb.b_alpha * c ** -g, c) is Region.IR
    assert region_of(fb, fb.b_m * c ** -g, c) is Region.NR
    assert region_of(fb, fb.b_beta * c ** -g, c) is Region.DR
    st = agent_state(fb, 2 * fb.b_beta, 1.0)
    assert st.region is Region.DR and st.z == pytest.approx(2 * fb.b_beta)


@pytest.mark.parametrize("factor, edge", [(0.3, "b_alpha"), (4.0, "b_beta")])
def test_jump_lands_on_edge(base_band, factor, edge):
    fb = base_band
    y = factor * getattr(fb, edge)
    c_new = reflected_consumption(fb, y, 1.0)
    assert y * c_new ** fb.params.gamma == pytest.approx(getattr(fb, edge), rel=1e-14)
    assert (c_new > 1.0) == (edge == "b_alpha")


def test_j_continuous_across_edges(base_band):
    fb = base_band
    g = fb.params.gamma
    for edge in (fb.b_alpha, fb.b_beta):
        y = 0.8
        c_edge = (edge / y) ** (1 / g)
        lo = j_eval(fb, y, c_edge * (1 - 1e-12))
        hi = j_eval(fb, y, c_edge * (1 + 1e-12))
        assert abs(lo - hi) < 1e-9


def test_j_convex_in_y(base_band):
    fb = base_band
    c = 1.0
    for y in nr_points(fb, c):
        h = 1e-3 * y
        d2 = (j_eval(fb, y + h, c) - 2 * j_eval(fb, y, c) + j_eval(fb, y - h, c)) / h ** 2
        assert d2 > 0


def test_j_matches_alternate_coefficients(wide_band):
    fb = wide_band
    p, k = fb.params, fb.constants
    y, c = 1.1, 1.0
    u = y / fb.b_alpha
    ref = (fb.d1_alt / k.e1 * u ** k.m1 + fb.d2_alt / k.e2 * u ** k.m2
           + 1 / (p.delta * (1 - p.gamma)) - y / p.r)
    assert j_eval(fb, y, c) == pytest.approx(ref, rel=1e-10)


def test_j_adjustment_branches(base_band):
    fb = base_band
    g = fb.params.gamma
    y, c = 0.2 * fb.b_alpha, 1.0
    c_ref = (y / fb.b_alpha) ** (-1 / g)
    expect = j_eval(fb, y, c_ref) + fb.params.alpha * (crra_utility(c, g) - crra_utility(c_ref, g))
    assert j_eval(fb, y, c) == pytest.approx(expect, rel=1e-13)
    y = 3 * fb.b_beta
    c_ref = (y / fb.b_beta) ** (-1 / g)
    expect = j_eval(fb, y, c_ref) - fb.params.beta * (crra_utility(c, g) - crra_utility(c_ref, g))
    assert j_eval(fb, y, c) == pytest.approx(expect, rel=1e-13)


def test_minus_j_y_is_wealth(base_band):
    fb = base_band
    for c in (0.5, 2.0):
        y = nr_points(fb, c)
        assert np.allclose(-j_y(fb, y, c), fb.wealth_map(y, c), rtol=1e-10)


def test_j_y_central_difference(base_band):
    fb = base_band
    c = 1.0
    outside = [0.3 * fb.b_alpha, 0.7 * fb.b_alpha, 1.5 * fb.b_beta, 4 * fb.b_beta]
    ys = np.concatenate([nr_points(fb, c, 40), outside, np.geomspace(0.01, 100, 6)])
    assert ys.size >= 50
    for y in ys:
        h = 1e-6 * y
        num = (j_eval(fb, y + h, c) - j_eval(fb, y - h, c)) / (2 * h)
        assert num == pytest.approx(j_y(fb, y, c), rel=1e-6), y


def test_j_y_monotone_and_limits(base_band):
    fb = base_band
    y = np.geomspace(1e-4, 1e4, 100)
    w = -j_y(fb, y, 1.0)
    assert np.all(np.diff(w) < 0)
    assert -j_y(fb, 1e-12, 1.0) > 1e5
    assert -j_y(fb, 1e12, 1.0) < 1e-4


def test_portfolio_equals_second_difference(wide_band):
    fb = wide_band
    k = fb.constants
    c = 1.0
    for y in nr_points(fb, c, 30):
        h = 1e-3 * y
        d2 = (j_eval(fb, y + h, c) - 2 * j_eval(fb, y, c) + j_eval(fb, y - h, c)) / h ** 2
        num = k.theta / fb.params.sigma * y * d2
        assert num == pytest.approx(portfolio_pi(fb, y, c), rel=1e-5)
        assert k.theta / fb.params.sigma * y * j_yy(fb, y, c) == pytest.approx(
            portfolio_pi(fb, y, c), rel=1e-12)


def test_portfolio_positive_on_band(wide_band):
    curves = band_curves(wide_band, 200)
    assert np.all(curves["pi_over_c"] > 0)
    assert np.all(curves["share"] > 0)


def test_share_is_merton_at_edges(wide_band):
    fb = wide_band
    ms = merton_share(fb.params)
    for edge in (fb.b_alpha, fb.b_beta):
        assert fb.share(edge) == pytest.approx(ms, rel=1e-8)
        assert rcrra(fb, edge, 1.0) == pytest.approx(fb.params.gamma, abs=1e-8)


def test_rcrra_homogeneous_and_bounded(wide_band):
    fb = wide_band
    g = fb.params.gamma
    y = nr_points(fb, 1.0, 20)
    for lam in (0.5, 3.0):
        assert np.allclose(rcrra(fb, y * lam ** -g, lam), rcrra(fb, y, 1.0), rtol=1e-12)
        assert np.allclose(portfolio_pi(fb, y * lam ** -g, lam), lam * portfolio_pi(fb, y, 1.0),
                           rtol=1e-12)
    assert np.all(rcrra(fb, y, 1.0) >= g)


def test_rcrra_unimodal(wide_band):
    fb = wide_band
    left = np.geomspace(fb.b_alpha, fb.b_hat, 300)[:-1]
    right = np.geomspace(fb.b_hat, fb.b_beta, 300)[1:]
    assert np.all(np.diff(fb.rcrra_z(left)) > 0)
    assert np.all(np.diff(fb.rcrra_z(right)) < 0)


def test_portfolio_domain(wide_band):
    with pytest.raises(DomainError):
        portfolio_pi(wide_band, 2 * wide_band.b_beta, 1.0)
    with pytest.raises(DomainError):
        rcrra(wide_band, 0.5 * wide_band.b_alpha, 1.0)
    with pytest.raises(DomainError):
        j_eval(wide_band, -1.0, 1.0)


def test_initial_multiplier_golden(base_band):
    y, c = solve_initial_multiplier(base_band, 50.0, 1.0)
    assert y == pytest.approx(GOLDEN_Y_STAR, rel=1e-11)
    assert c == 1.0
    assert region_of(base_band, y, c) is Region.NR


def test_initial_multiplier_residual(base_band):
    fb = base_band
    for x0 in (5.0, 20.0, 40.0, 60.0, 500.0):
        for c0 in (0.5, 1.0, 2.0):
            y, _ = solve_initial_multiplier(fb, x0, c0)
            assert abs(-j_y(fb, y, c0) - x0) < 1e-10 * x0


def test_initial_multiplier_at_upper_threshold(wide_band):
    fb = wide_band
    y, c = solve_initial_multiplier(fb, fb.x_hi, 1.0)
    assert y == pytest.approx(fb.b_alpha, rel=1e-10)
    assert c == pytest.approx(1.0, rel=1e-10)


def test_initial_multiplier_rich_agent_jumps_up(wide_band):
    fb = wide_band
    y, c = solve_initial_multiplier(fb, 1000.0, 1.0)
    assert region_of(fb, y, 1.0) is Region.IR
    assert c > 1.0
    assert c == pytest.approx(1000.0 / fb.x_hi, rel=1e-10)
    y, c = solve_initial_multiplier(fb, 5.0, 1.0)
    assert region_of(fb, y, 1.0) is Region.DR
    assert c == pytest.approx(5.0 / fb.x_lo, rel=1e-10)


def test_direct_inversion_matches_root_find(base_band):
    fb = base_band
    x0 = np.array([5.0, 30.0, 45.0, 57.0, 200.0])
    y_vec, c_vec = initial_multiplier_direct(fb, x0, 1.0)
    for i, x in enumerate(x0):
        y, c = solve_initial_multiplier(fb, x, 1.0)
        assert y_vec[i] == pytest.approx(y, rel=1e-11)
        assert c_vec[i] == pytest.approx(c, rel=1e-12)


def test_primal_value_is_minimum(base_band):
    fb = base_band
    x0, c0 = 45.0, 1.0
    v = primal_value(fb, x0, c0)
    y_star, _ = solve_initial_multiplier(fb, x0, c0)
    rng = np.random.default_rng(0)
    for y in y_star * rng.uniform(0.5, 1.5, 20):
        assert j_eval(fb, y, c0) + y * x0 >= v - 1e-12 * abs(v)


def test_primal_value_concave_in_wealth(base_band):
    xs = np.linspace(20, 80, 25)
    v = np.array([primal_value(base_band, x, 1.0) for x in xs])
    assert np.all(np.diff(v) > 0)
    assert np.all(np.diff(v, 2) < 0)


def test_merton_value_limit():
    base = ModelParams(**MARKET, gamma=2.0)
    near = solve(base.replace(alpha=1e-5, beta=1e-5))
    exact = solve(base)
    for x0 in (20.0, 36.0, 60.0):
        c0 = x0 * exact.constants.big_k
        assert primal_value(near, x0, c0) == pytest.approx(merton_value(exact, x0), rel=0.01)
        assert primal_value(exact, x0, c0) == pytest.approx(merton_value(exact, x0), rel=1e-10)


def test_merton_dual_closed_forms():
    fb = solve(ModelParams(**MARKET, gamma=3.0))
    for y in (0.3, 1.0, 4.0):
        h = 1e-6 * y
        num = (j_eval(fb, y + h, 1.0) - j_eval(fb, y - h, 1.0)) / (2 * h)
        assert num == pytest.approx(j_y(fb, y, 1.0), rel=1e-7)
        num2 = (j_y(fb, y + h, 1.0) - j_y(fb, y - h, 1.0)) / (2 * h)
        assert num2 == pytest.approx(j_yy(fb, y, 1.0), rel=1e-7)


def test_band_curves_shape(wide_band):
    curves = band_curves(wide_band, 11)
    assert set(curves) == {"s", "z", "x_over_c", "pi_over_c", "share", "rcrra"}
    assert curves["z"][0] == wide_band.b_alpha
    assert curves["z"][-1] == pytest.approx(wide_band.b_beta)
    assert curves["x_over_c"][0] == pytest.approx(wide_band.x_hi)
    assert curves["x_over_c"][-1] == pytest.approx(wide_band.x_lo)
