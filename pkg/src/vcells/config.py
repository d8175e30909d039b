"""Experiment configuration: dataclass, text-file parsing, serialization.

The file format is one `key = value` per line, `#` starts a comment, lists
are comma-separated. Missing keys fall back to the defaults below; unknown
keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .network import SystemParams
from .solver import SolverOptions

KNOWN_SCHEMES = ("joint", "user_centric", "bs_centric")
KNOWN_METHODS = ("hierarchical", "exhaustive")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    n_bs: int = 6
    n_users: int = 30
    trials: int = 500
    base_seed: int = 0
    area_side_m: float = 2500.0
    bandwidth_hz: float = 1e6
    carrier_hz: float = 1.8e9
    noise_psd_dbm_hz: float = -174.0
    max_power_dbm: float = 23.0
    v_list: tuple[int, ...] = ()          # empty means 1..n_bs
    schemes: tuple[str, ...] = KNOWN_SCHEMES
    methods: tuple[str, ...] = KNOWN_METHODS
    delta_bps: float = 1e3
    outer_max_iters: int = 50
    inner_max_iters: int = 500
    outer_tol: float = 1e-6
    inner_tol: float = 1e-6
    sinr_floor: float = 1e-12
    bisection_tol: float = 1e-9


def _parse_int(s):
    return int(s)


def _parse_float(s):
    return float(s)


def _parse_int_list(s):
    return tuple(int(x) for x in s.split(",") if x.strip() != "")


def _parse_str_list(s):
    return tuple(x.strip() for x in s.split(",") if x.strip() != "")


_PARSERS = {
    "n_bs": _parse_int,
    "n_users": _parse_int,
    "trials": _parse_int,
    "base_seed": _parse_int,
    "area_side_m": _parse_float,
    "bandwidth_hz": _parse_float,
    "carrier_hz": _parse_float,
    "noise_psd_dbm_hz": _parse_float,
    "max_power_dbm": _parse_float,
    "v_list": _parse_int_list,
    "schemes": _parse_str_list,
    "methods": _parse_str_list,
    "delta_bps": _parse_float,
    "outer_max_iters": _parse_int,
    "inner_max_iters": _parse_int,
    "outer_tol": _parse_float,
    "inner_tol": _parse_float,
    "sinr_floor": _parse_float,
    "bisection_tol": _parse_float,
}


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.n_bs < 1:
        raise ConfigError("n_bs", "must be at least 1")
    if cfg.n_users < 1:
        raise ConfigError("n_users", "must be at least 1")
    if cfg.trials < 1:
        raise ConfigError("trials", "must be at least 1")
    for v in cfg.v_list:
        if not 1 <= v <= cfg.n_bs:
            raise ConfigError("v_list", f"entry {v} outside [1, {cfg.n_bs}]")
    for s in cfg.schemes:
        if s not in KNOWN_SCHEMES:
            raise ConfigError("schemes", f"unknown scheme '{s}' (choose from {', '.join(KNOWN_SCHEMES)})")
    for m in cfg.methods:
        if m not in KNOWN_METHODS:
            raise ConfigError("methods", f"unknown method '{m}' (choose from {', '.join(KNOWN_METHODS)})")
    if not cfg.schemes:
        raise ConfigError("schemes", "at least one scheme required")
    if not cfg.methods:
        raise ConfigError("methods", "at least one method required")
    if cfg.delta_bps <= 0:
        raise ConfigError("delta_bps", "must be positive")
    try:
        solver_options(cfg)
        system_params(cfg)
    except ValueError as exc:
        raise ConfigError("solver/system", str(exc)) from exc
    return cfg


def _parse_pairs(pairs, base: ExperimentConfig) -> ExperimentConfig:
    values = dataclasses.asdict(base)
    for key, raw in pairs:
        if key not in _PARSERS:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {raw!r}: {exc}") from exc
    return _validate(ExperimentConfig(**values))


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(stripped.split()[0], f"line {lineno} is not 'key = value'")
        key, raw = stripped.split("=", 1)
        pairs.append((key.strip(), raw.strip()))
    return _parse_pairs(pairs, base or ExperimentConfig())


def load_config(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


def apply_overrides(cfg: ExperimentConfig, assignments) -> ExperimentConfig:
    """Apply `key=value` strings (e.g. from a CLI --set flag) on top of cfg."""
    pairs = []
    for item in assignments:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        pairs.append((key.strip(), raw.strip()))
    return _parse_pairs(pairs, cfg)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for field in dataclasses.fields(cfg):
        value = getattr(cfg, field.name)
        if isinstance(value, tuple):
            value = ",".join(str(x) for x in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{field.name} = {value}")
    return "\n".join(lines) + "\n"


def resolved_v_list(cfg: ExperimentConfig) -> tuple[int, ...]:
    return cfg.v_list if cfg.v_list else tuple(range(1, cfg.n_bs + 1))


def solver_options(cfg: ExperimentConfig) -> SolverOptions:
    return SolverOptions(
        outer_max_iters=cfg.outer_max_iters,
        inner_max_iters=cfg.inner_max_iters,
        outer_tol=cfg.outer_tol,
        inner_tol=cfg.inner_tol,
        sinr_floor=cfg.sinr_floor,
        bisection_tol=cfg.bisection_tol,
    )


def system_params(cfg: ExperimentConfig) -> SystemParams:
    return SystemParams(
        bandwidth_hz=cfg.bandwidth_hz,
        carrier_hz=cfg.carrier_hz,
        noise_psd_dbm_hz=cfg.noise_psd_dbm_hz,
        max_power_dbm=cfg.max_power_dbm,
        area_side_m=cfg.area_side_m,
    )
