"""Run configuration: presets, config files and command-line overrides.

Resolution order, later wins: built-in defaults, named preset, config
file, explicit command-line values.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

from .errors import ConfigError
from .params import PARAM_FIELDS, ModelParams
from .tables import BASE_MARKET, MOMENTS, MOMENTS_MARKET, REGRESSION, REGRESSION_GAMMA

SUBCOMMANDS = ("solve", "policy", "simulate", "moments", "regress", "tables")
FORMATS = ("csv", "json")


def _presets() -> dict:
    out = {
        "narrow-band": {"params": dict(BASE_MARKET, gamma=2.0, alpha=5.0, beta=10.0),
                    "x0": 50.0, "c0": 1.0, "horizon": 80.0},
        "wide-band": {"params": dict(BASE_MARKET, gamma=2.0, alpha=5.0, beta=100.0),
                    "x0": 50.0, "c0": 1.0},
    }
    for label, delta, gamma, a, b, _ in MOMENTS:
        out[label] = {"params": dict(MOMENTS_MARKET, delta=delta, gamma=gamma, alpha=a, beta=b),
                      "m_alpha": float(a), "m_beta": float(b), "v_alpha": 0.0, "v_beta": 0.0,
                      "n_agents": 100}
    for i, ((ma, va), (mb, vb), _) in enumerate(REGRESSION, start=1):
        out[f"regress-{i:02d}"] = {"params": dict(BASE_MARKET, gamma=REGRESSION_GAMMA),
                              "m_alpha": float(ma), "v_alpha": float(va),
                              "m_beta": float(mb), "v_beta": float(vb),
                              "n_agents": 1500, "T": 5, "k": 2}
    return out


PRESETS = _presets()


@dataclass
class RunConfig:
    """Fully resolved settings of one command-line run.

    ``params`` is None only for ``tables``, which carries its own
    parameterizations.
    """

    subcommand: str
    params: ModelParams | None = None
    preset: str | None = None
    seed: int = 0
    dt: float = 1.0 / 24.0
    reps: int = 100
    out: str = "out"
    format: str = "csv"
    # solve / policy
    grid: int = 201
    # simulate
    x0: float = 50.0
    c0: float = 1.0
    horizon: float = 80.0
    # population experiments
    n_agents: int | None = None
    m_alpha: float | None = None
    v_alpha: float = 0.0
    m_beta: float | None = None
    v_beta: float = 0.0
    wealth_init: str | float = "uniform"
    # regress
    scenario: str = "all"
    T: int = 5
    k: int = 2
    intercept: bool = False
    # moments
    years: int = 79
    frequency: str = "monthly"
    ep_mode: str = "gross"
    # tables
    table: str | None = None
    inverse: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = None if self.params is None else self.params.to_dict()
        return d


_OPTION_TYPES = {f.name: f.type for f in fields(RunConfig)}
OPTION_KEYS = tuple(k for k in _OPTION_TYPES if k not in ("subcommand", "params"))


def load_file(path) -> dict:
    """Read a YAML or JSON mapping."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {p}: {exc}") from exc
    try:
        data = json.loads(text) if p.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError("config", f"cannot parse {p}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return data


def _split(data: dict, source: str) -> tuple[dict, dict]:
    """Separate model parameters from run options, rejecting unknown keys."""
    params, opts = {}, {}
    for key, value in data.items():
        if key == "params":
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError("params", f"must be a mapping in {source}")
            for pk, pv in value.items():
                if pk not in PARAM_FIELDS:
                    raise ConfigError(f"params.{pk}", f"unknown parameter in {source}")
                params[pk] = pv
        elif key in PARAM_FIELDS:
            params[key] = value
        elif key in OPTION_KEYS or key == "subcommand":
            opts[key] = value
        else:
            raise ConfigError(key, f"unknown key in {source}")
    return params, opts


def _coerce(key: str, value):
    if value is None:
        return None
    kind = str(_OPTION_TYPES.get(key, ""))
    try:
        if kind.startswith("int"):
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if kind.startswith("float"):
            return float(value)
        if kind.startswith("bool"):
            if isinstance(value, str):
                if value.lower() in ("true", "yes", "1"):
                    return True
                if value.lower() in ("false", "no", "0"):
                    return False
                raise ValueError
            return bool(value)
        if key == "wealth_init":
            return value if value == "uniform" else float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"bad value {value!r}") from exc
    return value


def parse_config(args: dict | None = None, file=None) -> RunConfig:
    """Resolve a ``RunConfig`` from command-line values and an optional file.

    Parameters
    ----------
    args : dict
        Command-line values; entries set to None count as absent.
    file : path, optional
        YAML or JSON config file.

    Raises
    ------
    ConfigError
        Names the offending key.
    """
    args = {k: v for k, v in (args or {}).items() if v is not None}
    file_data = load_file(file) if file is not None else {}
    f_params, f_opts = _split(file_data, "config file")
    c_params, c_opts = _split(args, "command line")

    sub = c_opts.pop("subcommand", None) or f_opts.pop("subcommand", None)
    f_opts.pop("subcommand", None)
    if sub not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"expected one of {', '.join(SUBCOMMANDS)}")

    preset_name = c_opts.get("preset", f_opts.get("preset"))
    merged_params, merged_opts = {}, {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset_name!r}; "
                              f"known: {', '.join(sorted(PRESETS))}")
        preset = dict(PRESETS[preset_name])
        merged_params.update(preset.pop("params"))
        merged_opts.update(preset)
    merged_params.update(f_params)
    merged_opts.update(f_opts)
    merged_params.update(c_params)
    merged_opts.update(c_opts)

    opts = {k: _coerce(k, v) for k, v in merged_opts.items()}
    cfg = RunConfig(subcommand=sub, **opts)

    if sub != "tables" or merged_params:
        values = {}
        for key in PARAM_FIELDS:
            if key not in merged_params:
                if key in ("alpha", "beta"):
                    values[key] = 0.0
                    continue
                raise ConfigError(key, "missing model parameter")
            try:
                values[key] = float(merged_params[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"bad value {merged_params[key]!r}") from exc
        cfg.params = ModelParams(**values)
        cfg.params.validate()
    return _validate(cfg)


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.format not in FORMATS:
        raise ConfigError("format", f"expected one of {', '.join(FORMATS)}")
    if not cfg.dt > 0:
        raise ConfigError("dt", "must be positive")
    if cfg.reps < 1:
        raise ConfigError("reps", "must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    if cfg.grid < 2 and not (cfg.subcommand == "solve" and cfg.grid == 0):
        raise ConfigError("grid", "need at least 2 points (0 skips the grid for solve)")
    if not (cfg.x0 > 0 and cfg.c0 > 0):
        raise ConfigError("x0" if not cfg.x0 > 0 else "c0", "must be positive")
    if cfg.n_agents is not None and cfg.n_agents < 1:
        raise ConfigError("n_agents", "must be at least 1")
    if cfg.frequency not in ("monthly", "annual"):
        raise ConfigError("frequency", "expected monthly or annual")
    if cfg.ep_mode not in ("gross", "literal"):
        raise ConfigError("ep_mode", "expected gross or literal")
    if cfg.scenario not in ("all", "bull", "intermediate", "bear", "highvol"):
        raise ConfigError("scenario", "expected all, bull, intermediate, bear or highvol")
    if not (1 <= cfg.k <= cfg.T):
        raise ConfigError("k", "need 1 <= k <= T")
    if cfg.subcommand == "tables" and cfg.table is None:
        raise ConfigError("table", "tables needs a table id")
    return cfg


def dump_config(cfg: RunConfig, path) -> Path:
    """Write the resolved config so that ``parse_config(file=path)`` restores it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    return path


__all__ = ["RunConfig", "parse_config", "dump_config", "load_file", "PRESETS", "SUBCOMMANDS"]
