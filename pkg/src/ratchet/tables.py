"""Reference tables and their side-by-side reproduction.

Each ``table_*`` function returns a list of row dicts holding the computed
values, the printed reference values and their deviations.
"""

from __future__ import annotations

import math

from .boundaries import calibrate_beta, solve
from .errors import ConfigError
from .experiments import (LOW_REP_THRESHOLD, PopulationConfig, run_moments_experiment,
                          run_regression_experiment)
from .params import ModelParams

BASE_MARKET = dict(r=0.015, mu=0.085, sigma=0.25, delta=0.02)
MOMENTS_MARKET = dict(r=0.0086, mu=0.0784, sigma=0.2016)

# risky share ranges in percent, (alpha, beta) -> {gamma: (low, high)}
RISKY_SHARE = {
    (0, 0): {0.9: (124, 124), 1.5: (75, 75), 3.5: (32, 32), 6: (19, 19), 10: (11, 11)},
    (5, 10): {0.9: (100, 124), 1.5: (55, 75), 3.5: (24, 32), 6: (11, 19), 10: (9, 11)},
    (25, 100): {0.9: (48, 124), 1.5: (27, 75), 3.5: (14, 32), 6: (9, 19), 10: (6, 11)},
    (49, 100): {0.9: (15, 124), 1.5: (9, 75), 3.5: (6, 32), 6: (4, 19), 10: (2, 11)},
}

# peak RCRRA at gamma = 0.9, (alpha, beta) -> {sigma: value}
MAX_RCRRA = {
    (5, 10): {0.25: 1.116, 0.3: 1.164, 0.35: 1.208, 0.4: 1.249},
    (5, 100): {0.25: 1.782, 0.3: 1.974, 0.35: 2.164, 0.4: 2.358},
    (29, 100): {0.25: 2.502, 0.3: 2.866, 0.35: 3.250, 0.4: 3.668},
    (49, 100): {0.25: 7.459, 0.3: 9.607, 0.35: 12.40, 0.4: 16.07},
    (49, 1000): {0.25: 13.18, 0.3: 18.48, 0.35: 26.20, 0.4: 37.46},
}

# (alpha, beta) pairs calibrated to a peak RCRRA of 13, gamma -> list
CALIBRATION_TARGET = 13.0
CALIBRATION = {
    0.9: [(40, 10000), (45, 5000), (49, 1000)],
    1.05: [(40, 6000), (45, 3000), (49, 500)],
    1.15: [(40, 4500), (45, 2200), (49, 400)],
    1.3: [(40, 3200), (45, 1500), (49, 260)],
    1.5: [(40, 2200), (45, 1100), (49, 180)],
}

# regression slopes: ((m_a, v_a), (m_b, v_b)) -> {scenario: (rho, p or None)}
# p = None means the printed entry is flagged below 1%
REGRESSION = [
    ((5, 25), (50, 400), {"bull": (0.1369, None), "intermediate": (0.0208, 0.22),
                          "bear": (-0.0757, None), "highvol": (-0.0679, None)}),
    ((10, 25), (100, 400), {"bull": (0.0999, None), "intermediate": (0.0829, None),
                            "bear": (-0.0746, None), "highvol": (-0.0699, None)}),
    ((10, 25), (150, 2500), {"bull": (0.1107, None), "intermediate": (0.1261, None),
                             "bear": (-0.0478, 0.01), "highvol": (-0.0271, 0.26)}),
    ((15, 100), (150, 2500), {"bull": (0.1118, None), "intermediate": (0.1229, None),
                              "bear": (-0.0387, 0.04), "highvol": (-0.0341, 0.17)}),
    ((15, 100), (200, 2500), {"bull": (0.0961, None), "intermediate": (0.1710, None),
                              "bear": (-0.0164, 0.43), "highvol": (-0.0379, 0.14)}),
]
REGRESSION_GAMMA = 1.5

MOMENT_KEYS = ("mean_cg", "sd_cg", "ep", "sd_imrs", "ac1")
# (label, delta, gamma, alpha, beta, reference moments)
MOMENTS = [
    ("moments-base", 0.015, 3.5, 5, 10, (0.0181, 0.0236, 0.0052, 0.0775, 0.4900)),
    ("moments-merton", 0.015, 3.5, 0, 0, (0.0200, 0.0858, 0.0526, 0.2996, 0.1677)),
    ("moments-01", 0.015, 3.5, 5, 10, (0.0181, 0.0236, 0.0052, 0.0775, 0.4900)),
    ("moments-02", 0.015, 3.5, 5, 15, (0.0182, 0.0232, 0.0050, 0.0758, 0.4888)),
    ("moments-03", 0.015, 3.5, 5, 20, (0.0183, 0.0229, 0.0049, 0.0747, 0.4881)),
    ("moments-04", 0.015, 3.5, 0, 20, (0.0182, 0.0233, 0.0050, 0.0762, 0.4889)),
    ("moments-05", 0.015, 3.5, 5, 20, (0.0183, 0.0229, 0.0049, 0.0747, 0.4881)),
    ("moments-06", 0.015, 3.5, 10, 20, (0.0184, 0.0226, 0.0048, 0.0736, 0.4869)),
    ("moments-07", 0.015, 3.5, 30, 100, (0.0191, 0.0217, 0.0044, 0.0699, 0.4825)),
    ("moments-08", 0.015, 3.5, 50, 100, (0.0192, 0.0215, 0.0044, 0.0693, 0.4808)),
    ("moments-09", 0.015, 3.5, 50, 1000, (0.0192, 0.0215, 0.0044, 0.0691, 0.4802)),
    ("moments-10", 0.010, 3.5, 5, 10, (0.0194, 0.0242, 0.0054, 0.0791, 0.4888)),
    ("moments-11", 0.015, 3.5, 5, 10, (0.0181, 0.0236, 0.0052, 0.0775, 0.4900)),
    ("moments-12", 0.050, 3.5, 5, 10, (0.0093, 0.0204, 0.0039, 0.0683, 0.4953)),
    ("moments-13", 0.015, 0.9, 5, 10, (0.0738, 0.0963, 0.0052, 0.0775, 0.4889)),
    ("moments-14", 0.015, 1.5, 5, 10, (0.0431, 0.0563, 0.0052, 0.0775, 0.4898)),
    ("moments-15", 0.015, 3.5, 5, 10, (0.0181, 0.0236, 0.0052, 0.0775, 0.4900)),
    ("moments-16", 0.015, 10, 5, 10, (0.0063, 0.0082, 0.0052, 0.0775, 0.4900)),
]

TABLE_IDS = ("risky-share", "max-rcrra", "calibration", "regression", "moments")


def _dev(computed: float, reference: float) -> tuple[float, float]:
    d = computed - reference
    return d, (d / reference if reference else math.nan)


def base_params(**kw) -> ModelParams:
    return ModelParams(**{**BASE_MARKET, **kw})


def moments_params(label: str) -> ModelParams:
    for lab, delta, gamma, a, b, _ in MOMENTS:
        if lab == label:
            return ModelParams(delta=delta, gamma=gamma, alpha=a, beta=b, **MOMENTS_MARKET)
    raise KeyError(label)


def share_range(params: ModelParams) -> tuple[float, float]:
    """Smallest and largest risky share over the band, in percent."""
    fb = solve(params)
    p = params
    lo = (p.mu - p.r) / p.sigma ** 2 / fb.rcrra_max
    hi = (p.mu - p.r) / (p.gamma * p.sigma ** 2)
    return 100 * lo, 100 * hi


def table_risky_share() -> list[dict]:
    rows = []
    for (a, b), cells in RISKY_SHARE.items():
        for g, (ref_lo, ref_hi) in cells.items():
            lo, hi = share_range(base_params(gamma=g, alpha=a, beta=b))
            rows.append({"alpha": a, "beta": b, "gamma": g,
                         "share_min_pct": lo, "share_max_pct": hi,
                         "ref_min_pct": ref_lo, "ref_max_pct": ref_hi,
                         "abs_dev_min": lo - ref_lo, "abs_dev_max": hi - ref_hi,
                         "rel_dev_min": _dev(lo, ref_lo)[1], "rel_dev_max": _dev(hi, ref_hi)[1]})
    return rows


def table_max_rcrra() -> list[dict]:
    rows = []
    for (a, b), cells in MAX_RCRRA.items():
        for s, ref in cells.items():
            v = solve(base_params(gamma=0.9, sigma=s, alpha=a, beta=b)).rcrra_max
            d, rel = _dev(v, ref)
            rows.append({"alpha": a, "beta": b, "sigma": s, "rcrra_max": v, "reference": ref,
                         "abs_dev": d, "rel_dev": rel})
    return rows


def table_calibration(inverse: bool = False) -> list[dict]:
    """Peak RCRRA for each calibrated pair; optionally re-solve beta."""
    rows = []
    for g, pairs in CALIBRATION.items():
        for a, b in pairs:
            p = base_params(gamma=g, alpha=a, beta=b)
            v = solve(p).rcrra_max
            d, rel = _dev(v, CALIBRATION_TARGET)
            row = {"gamma": g, "alpha": a, "beta": b, "rcrra_max": v,
                   "target": CALIBRATION_TARGET, "abs_dev": d, "rel_dev": rel}
            if inverse:
                row["beta_calibrated"] = calibrate_beta(p, CALIBRATION_TARGET)
            rows.append(row)
    return rows


def table_regression(n_agents: int = 1500, seed: int = 0, horizon: int = 5,
                     k: int = 2) -> list[dict]:
    rows = []
    p = base_params(gamma=REGRESSION_GAMMA)
    for i, ((ma, va), (mb, vb), cells) in enumerate(REGRESSION):
        cfg = PopulationConfig(n_agents=n_agents, m_alpha=ma, v_alpha=va, m_beta=mb,
                               v_beta=vb, seed=seed)
        for j, (scen, (ref, ref_p)) in enumerate(cells.items()):
            rep = run_regression_experiment(cfg, p, scen, horizon, k, seed=seed + 100 * i + j)
            rows.append({"m_alpha": ma, "v_alpha": va, "m_beta": mb, "v_beta": vb,
                         "scenario": scen, "rho_hat": rep.rho_hat, "p_value": rep.p_value,
                         "t_stat": rep.t_stat, "n_obs": rep.n_obs,
                         "reference": ref, "reference_p": "<0.01" if ref_p is None else ref_p,
                         "sign_match": (rep.rho_hat > 0) == (ref > 0),
                         "abs_dev": rep.rho_hat - ref,
                         "total_log_return": rep.total_log_return,
                         "realized_vol": rep.realized_vol, "seed": rep.seed})
    return rows


def table_moments(reps: int = 100, seed: int = 0, n_agents: int = 100,
                  labels=None) -> list[dict]:
    rows = []
    for lab, delta, gamma, a, b, ref in MOMENTS:
        if labels is not None and lab not in labels:
            continue
        p = moments_params(lab)
        cfg = PopulationConfig(n_agents=n_agents, m_alpha=a, m_beta=b, seed=seed)
        rep = run_moments_experiment(cfg, p, reps=reps, seed=seed)
        row = {"label": lab, "delta": delta, "gamma": gamma, "alpha": a, "beta": b}
        for key, r in zip(MOMENT_KEYS, ref):
            v = getattr(rep, key)
            d, rel = _dev(v, r)
            row.update({key: v, "se_" + key: getattr(rep, "se_" + key), "ref_" + key: r,
                        "rel_dev_" + key: rel})
        row.update({"n_reps": reps, "low_rep": reps < LOW_REP_THRESHOLD,
                    "ac1_defined": rep.ac1_defined, "seed": seed})
        rows.append(row)
    return rows


def reproduce_table(which: str, reps: int = 100, seed: int = 0, n_agents: int | None = None,
                    inverse: bool = False) -> list[dict]:
    """Rows for one table id (see ``TABLE_IDS``)."""
    if which == "risky-share":
        return table_risky_share()
    if which == "max-rcrra":
        return table_max_rcrra()
    if which == "calibration":
        return table_calibration(inverse)
    if which == "regression":
        return table_regression(n_agents or 1500, seed)
    if which == "moments":
        return table_moments(reps, seed, n_agents or 100)
    raise ConfigError("table", f"unknown id {which!r}; expected one of {', '.join(TABLE_IDS)}")
