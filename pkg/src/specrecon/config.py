"""Flat key=value experiment configuration with defaults, strict unknown-key
rejection, serialization, and --set style overrides."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import List, Tuple

from .errors import ConfigParseError

COMMANDS = ("simulate", "reconstruct", "validate", "scaling", "mp-compare", "insert")
MODELS = ("identity", "linear", "geometric", "two_cluster")
FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "validate"
    p: int = 100
    c: float = 2.0
    seed: int = 0
    model: str = "linear"
    model_lo: float = 1.0
    model_hi: float = 10.0
    model_fraction: float = 0.5
    trials: int = 10
    K: int = 2
    C_universal: float = 1.0
    epsilon: float = 0.5
    eta: float = 1e-3
    insert_index: int = -1  # -1 means p // 2
    c_list: Tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    output_dir: str = "out"
    formats: Tuple[str, ...] = ("csv", "json", "svg")


def _parse_bool_list(raw: str, allowed, key: str) -> Tuple[str, ...]:
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    for it in items:
        if it not in allowed:
            raise ConfigParseError(f"key {key!r}: unknown value {it!r}")
    if not items:
        raise ConfigParseError(f"key {key!r}: empty list")
    return items


def _parse_float_list(raw: str, key: str) -> Tuple[float, ...]:
    try:
        items = tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigParseError(f"key {key!r}: {exc}") from exc
    if not items:
        raise ConfigParseError(f"key {key!r}: empty list")
    return items


def _set_one(cfg: ExperimentConfig, key: str, raw: str, where: str) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    if key not in known:
        raise ConfigParseError(f"{where}: unknown key {key!r}")
    try:
        if key == "command":
            val = raw.strip()
        elif key == "model":
            val = raw.strip()
        elif key == "output_dir":
            val = raw.strip()
        elif key == "formats":
            val = _parse_bool_list(raw, FORMATS, key)
        elif key == "c_list":
            val = _parse_float_list(raw, key)
        elif key in ("p", "seed", "trials", "K", "insert_index"):
            val = int(raw)
        else:
            val = float(raw)
    except ConfigParseError:
        raise
    except ValueError as exc:
        raise ConfigParseError(f"{where}: key {key!r}: {exc}") from exc
    return replace(cfg, **{key: val})


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.command not in COMMANDS:
        raise ConfigParseError(f"key 'command': unknown command {cfg.command!r}")
    if cfg.model not in MODELS:
        raise ConfigParseError(f"key 'model': unknown model {cfg.model!r}")
    if cfg.p < 2:
        raise ConfigParseError("key 'p': must be >= 2")
    if cfg.c <= 0:
        raise ConfigParseError("key 'c': must be positive")
    if cfg.trials < 1:
        raise ConfigParseError("key 'trials': must be >= 1")
    if cfg.K < 0:
        raise ConfigParseError("key 'K': must be >= 0")
    if not 0 < cfg.epsilon < 1:
        raise ConfigParseError("key 'epsilon': must lie in (0, 1)")
    if cfg.eta <= 0:
        raise ConfigParseError("key 'eta': must be positive")
    if cfg.model_lo <= 0 or cfg.model_hi <= 0:
        raise ConfigParseError("key 'model_lo'/'model_hi': must be positive")
    if not 0 < cfg.model_fraction < 1:
        raise ConfigParseError("key 'model_fraction': must lie in (0, 1)")
    if any(cv <= 0 for cv in cfg.c_list):
        raise ConfigParseError("key 'c_list': entries must be positive")
    if cfg.C_universal <= 0:
        raise ConfigParseError("key 'C_universal': must be positive")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key = value format; '#' starts a comment; unknown keys
    are hard errors."""
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigParseError(f"line {lineno}: expected key = value, got {body!r}")
        key, raw = body.split("=", 1)
        cfg = _set_one(cfg, key.strip(), raw.strip(), f"line {lineno}")
    return validate_config(cfg)


def apply_overrides(cfg: ExperimentConfig, pairs: List[str]) -> ExperimentConfig:
    """Apply --set key=value overrides on top of a parsed config."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigParseError(f"override {pair!r}: expected key=value")
        key, raw = pair.split("=", 1)
        cfg = _set_one(cfg, key.strip(), raw.strip(), f"override {pair!r}")
    return validate_config(cfg)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
