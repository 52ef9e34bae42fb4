"""Run configuration: ``key = value`` files overridden by command-line flags."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

from .core import Interval
from .engine import GridSpec


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    interval: tuple = (0.0, 1.0)
    t: float = 10.0
    t_list: tuple = (1.0, 50.0)
    n: int = 10000
    start: float = 0.0
    seed: int = 1
    coarse_dt: float = 1e-3
    fine_dt: float = 1e-6
    block: int = 256
    tail_tolerance: float = 1e-12
    q_switch: float = 0.5
    q_chunk: float = 0.1
    u: tuple = (0.25, 0.5, 1.0)
    y: tuple = (0.1, 0.3, 0.5)
    n_limit: int = 100000
    n_ref: int = 20000
    s_threshold: float = 0.5
    horizon: float = 200.0
    replicates: int = 50
    epsilon: float = 0.01
    local_fine_dt: float = 1e-6
    buckets: int = 8
    mode: str = "matched"
    grid_x: tuple = (0.25, 0.5, 0.75)
    grid_s: tuple = (0.1, 0.5, 1.0)
    oracle_paths: int = 1000000
    oracle_dt: float = 1e-4
    sampler_draws: int = 10000

    @property
    def interval_obj(self) -> Interval:
        return Interval(*self.interval)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.coarse_dt, self.fine_dt, self.block)

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def render(self) -> str:
        return "\n".join(f"{k} = {format_value(v)}" for k, v in self.items())

    def digest(self) -> str:
        """Git-style blob hash of the rendered config."""
        body = (self.render() + "\n").encode("utf-8")
        return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


_PARSERS = {
    "interval": _floats, "t": float, "t_list": _floats, "n": int, "start": float, "seed": int,
    "coarse_dt": float, "fine_dt": float, "block": int, "tail_tolerance": float, "q_switch": float,
    "q_chunk": float, "u": _floats, "y": _floats, "n_limit": int, "n_ref": int, "s_threshold": float,
    "horizon": float, "replicates": int, "epsilon": float, "local_fine_dt": float, "buckets": int,
    "mode": str, "grid_x": _floats, "grid_s": _floats, "oracle_paths": int, "oracle_dt": float,
    "sampler_draws": int,
}
KEYS = tuple(_PARSERS)


def format_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(key: str, text: str, where: str = ""):
    if key not in _PARSERS:
        raise ConfigError(f"{where}unknown key {key!r}")
    try:
        return _PARSERS[key](text.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}bad value for {key!r}: {exc}") from None


def parse_text(text: str, name: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{name}:{lineno}: "
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{where}duplicate key {key!r}")
        out[key] = parse_value(key, value, where)
    return out


def load_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), path)


def build_config(file_values: dict = None, overrides: dict = None) -> RunConfig:
    """Defaults, then file values, then overrides; validated as a whole."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key in merged:
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
    cfg = replace(RunConfig(), **merged)
    validate(cfg)
    return cfg


def _require(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def validate(cfg: RunConfig):
    _require(len(cfg.interval) == 2, "interval", "needs exactly two values a,b")
    a, b = cfg.interval
    _require(math.isfinite(a) and math.isfinite(b), "interval", "endpoints must be finite")
    _require(a < b, "interval", f"requires a < b, got {a},{b}")
    _require(cfg.t > 0, "t", "must be positive")
    _require(len(cfg.t_list) > 0 and all(x > 0 for x in cfg.t_list), "t_list", "needs positive values")
    _require(all(y > x for x, y in zip(cfg.t_list, cfg.t_list[1:])), "t_list", "must be increasing")
    _require(cfg.n > 0, "n", "must be positive")
    _require(math.isfinite(cfg.start), "start", "must be finite")
    _require(cfg.coarse_dt > 0, "coarse_dt", "must be positive")
    _require(cfg.fine_dt > 0, "fine_dt", "must be positive")
    _require(cfg.fine_dt <= cfg.coarse_dt, "fine_dt", "must not exceed coarse_dt")
    _require(cfg.block >= 1, "block", "must be >= 1")
    _require(0 < cfg.tail_tolerance < 1, "tail_tolerance", "must lie in (0, 1)")
    _require(cfg.q_switch > 0, "q_switch", "must be positive")
    _require(cfg.q_chunk > 0, "q_chunk", "must be positive")
    _require(all(x > 0 for x in cfg.u), "u", "values must be positive")
    _require(all(0 < x < b - a for x in cfg.y), "y", "values must lie in (0, b - a)")
    for key in ("n_limit", "n_ref", "replicates", "buckets", "oracle_paths", "sampler_draws"):
        _require(getattr(cfg, key) > 0, key, "must be positive")
    _require(cfg.s_threshold > 0, "s_threshold", "must be positive")
    _require(cfg.horizon > 0, "horizon", "must be positive")
    _require(cfg.epsilon > 0, "epsilon", "must be positive")
    _require(cfg.local_fine_dt > 0, "local_fine_dt", "must be positive")
    _require(cfg.mode in ("matched", "midpoint"), "mode", "must be 'matched' or 'midpoint'")
    _require(all(a < x < b for x in cfg.grid_x), "grid_x", "values must lie inside the interval")
    _require(all(s > 0 for s in cfg.grid_s), "grid_s", "values must be positive")
    _require(cfg.oracle_dt > 0, "oracle_dt", "must be positive")
