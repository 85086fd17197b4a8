"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import policy
from .boundaries import solve
from .config import PRESETS, SUBCOMMANDS, RunConfig, dump_config, parse_config
from .errors import ConfigError, DomainError, NotApplicable, NumericalError
from .experiments import (PopulationConfig, Scenario, run_moments_experiment,
                          run_regression_experiment)
from .params import PARAM_FIELDS
from .report import flatten, write_columns, write_csv, write_json, write_key_values
from .simulate import simulate_agent, simulate_market
from .tables import TABLE_IDS, reproduce_table

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON config file")
    common.add_argument("--preset", help=f"named parameterization ({', '.join(sorted(PRESETS))})")
    common.add_argument("--seed", type=int, help="master RNG seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--reps", type=int, help="Monte Carlo replications")
    common.add_argument("--dt", type=float, help="time step in years")
    for name in PARAM_FIELDS:
        common.add_argument(f"--{name}", type=float)

    parser = argparse.ArgumentParser(prog="ratchet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("solve", parents=[common], help="band constants and a plotting grid")
    p.add_argument("--grid", type=int, help="points of the z grid (0 to skip)")

    p = sub.add_parser("policy", parents=[common], help="policy curves over the band")
    p.add_argument("--grid", type=int)

    p = sub.add_parser("simulate", parents=[common], help="one optimal path")
    p.add_argument("--x0", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--horizon", type=float)

    for name in ("moments", "regress"):
        p = sub.add_parser(name, parents=[common],
                           help="aggregate consumption moments" if name == "moments"
                           else "risky share on wealth regressions")
        p.add_argument("--n-agents", dest="n_agents", type=int)
        p.add_argument("--m-alpha", dest="m_alpha", type=float)
        p.add_argument("--v-alpha", dest="v_alpha", type=float)
        p.add_argument("--m-beta", dest="m_beta", type=float)
        p.add_argument("--v-beta", dest="v_beta", type=float)
        p.add_argument("--c0", type=float)
        if name == "moments":
            p.add_argument("--years", type=int)
            p.add_argument("--frequency", choices=("monthly", "annual"))
            p.add_argument("--ep-mode", dest="ep_mode", choices=("gross", "literal"))
        else:
            p.add_argument("--scenario",
                           choices=("all", "bull", "intermediate", "bear", "highvol"))
            p.add_argument("--T", dest="T", type=int)
            p.add_argument("--k", type=int)
            p.add_argument("--intercept", action="store_const", const=True)

    p = sub.add_parser("tables", parents=[common], help="reproduce a reference table")
    p.add_argument("table", choices=TABLE_IDS)
    p.add_argument("--n-agents", dest="n_agents", type=int)
    p.add_argument("--inverse", action="store_const", const=True,
                   help="calibration: also solve beta for the target")
    return parser


def _emit(cfg: RunConfig, name: str, rows=None, columns=None, summary=None) -> list[Path]:
    """Write one result in the configured format plus the resolved config."""
    out = Path(cfg.out)
    written = [dump_config(cfg, out / f"{name}.config.json")]
    if cfg.format == "json":
        body = {"config": cfg.to_dict()}
        if summary is not None:
            body["summary"] = summary
        if rows is not None:
            body["rows"] = rows
        if columns is not None:
            body["columns"] = {k: np.asarray(v).tolist() for k, v in columns.items()}
        written.append(write_json(out / f"{name}.json", body))
        return written
    if rows is not None:
        written.append(write_csv(out / f"{name}.csv", rows))
    if columns is not None:
        written.append(write_columns(out / f"{name}.csv", columns))
    if summary is not None:
        data = dict(summary)
        data.update(flatten("config", cfg.to_dict()))
        tabular = rows is not None or columns is not None
        target = f"{name}_summary.csv" if tabular else f"{name}.csv"
        written.append(write_key_values(out / target, data))
    return written


DEFAULT_AGENTS = {"moments": 100, "regress": 1500}


def _population(cfg: RunConfig) -> PopulationConfig:
    p = cfg.params
    n = DEFAULT_AGENTS[cfg.subcommand] if cfg.n_agents is None else cfg.n_agents
    return PopulationConfig(n_agents=n,
                            m_alpha=p.alpha if cfg.m_alpha is None else cfg.m_alpha,
                            v_alpha=cfg.v_alpha,
                            m_beta=p.beta if cfg.m_beta is None else cfg.m_beta,
                            v_beta=cfg.v_beta, c0=cfg.c0, wealth_init=cfg.wealth_init,
                            seed=cfg.seed)


def cmd_solve(cfg: RunConfig):
    fb = solve(cfg.params)
    summary = dict(fb.to_dict())
    summary["frictionless"] = fb.frictionless
    columns = None
    if cfg.grid > 0 and not fb.frictionless:
        z = np.geomspace(fb.b_alpha, fb.b_beta, cfg.grid)
        columns = {"z": z, "h": fb.h_eval(z), "h_prime": fb.h_prime(z),
                   "x_over_c": fb.wealth_ratio(z), "share": fb.share(z), "rcrra": fb.rcrra_z(z)}
    return _emit(cfg, "solve", columns=columns, summary=summary), summary


def cmd_policy(cfg: RunConfig):
    fb = solve(cfg.params)
    curves = policy.band_curves(fb, cfg.grid)
    return _emit(cfg, "policy", columns=curves), None


def cmd_simulate(cfg: RunConfig):
    fb = solve(cfg.params)
    market = simulate_market(cfg.params, cfg.horizon, cfg.dt, cfg.seed)
    rec = simulate_agent(cfg.x0, cfg.c0, market, fb)
    cols = {"t": rec.times, "y": rec.y, "z": rec.z, "c": rec.c, "c_up": rec.c_up,
            "c_dn": rec.c_dn, "x": rec.x, "pi": rec.pi, "share": rec.share, "rcrra": rec.rcrra}
    summary = rec.summary()
    return _emit(cfg, "simulate", columns=cols, summary=summary), summary


def cmd_moments(cfg: RunConfig):
    rep = run_moments_experiment(_population(cfg), cfg.params, reps=cfg.reps, seed=cfg.seed,
                                 years=cfg.years, dt=cfg.dt, frequency=cfg.frequency,
                                 ep_mode=cfg.ep_mode)
    cols = {"rep": np.arange(rep.n_reps)}
    cols.update(rep.per_rep)
    summary = rep.summary()
    return _emit(cfg, "moments", columns=cols, summary=summary), summary


def cmd_regress(cfg: RunConfig):
    scenarios = [s.value for s in Scenario] if cfg.scenario == "all" else [cfg.scenario]
    rows = []
    for i, s in enumerate(scenarios):
        rep = run_regression_experiment(_population(cfg), cfg.params, s, cfg.T, cfg.k,
                                        seed=cfg.seed + i, intercept=cfg.intercept)
        rows.append(rep.to_dict())
    return _emit(cfg, "regress", rows=rows), None


def cmd_tables(cfg: RunConfig):
    rows = reproduce_table(cfg.table, reps=cfg.reps, seed=cfg.seed,
                           n_agents=cfg.n_agents, inverse=cfg.inverse)
    return _emit(cfg, f"table_{cfg.table}", rows=rows), None


COMMANDS = {"solve": cmd_solve, "policy": cmd_policy, "simulate": cmd_simulate,
            "moments": cmd_moments, "regress": cmd_regress, "tables": cmd_tables}
assert set(COMMANDS) == set(SUBCOMMANDS)


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    values = vars(ns).copy()
    file = values.pop("config", None)
    try:
        cfg = parse_config(values, file)
        written, summary = COMMANDS[cfg.subcommand](cfg)
    except (ConfigError, DomainError, NotApplicable) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if summary:
        for k, v in summary.items():
            print(f"{k} = {v}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
