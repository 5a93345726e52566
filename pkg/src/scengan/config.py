"""Run configuration: INI-style file with one section per command.

Flag values override file values; every key is validated against the
command's schema before any work starts, and unknown keys are rejected.
The effective configuration hashes to a short provenance token written
into every output file header.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigurationError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}")


@dataclass
class SynthConfig:
    kind: str = "ar1_wind"
    days: int = 100
    sites: int = 8
    resolution_min: int = 0          # 0: kind default
    capacity_mw: float = 16.0
    phi: float = 0.9
    squash_scale: float = 1.0
    corr_rho: float = 0.85
    seed: int = 0
    out: str = "out"


@dataclass
class TrainConfigFile:
    data: str = ""
    labels: str = "none"             # none|mean|ramp|month|forecast_error
    arch: str = "conv"               # conv|mlp
    scale: float = 0.125
    grid_h: int = 24
    grid_w: int = 24
    shaping: str = "single_site_grid"
    train_fraction: float = 0.8
    stratified: bool = True
    alpha: float = 5e-5
    clip: float = 0.01
    batch_size: int = 32
    n_discri: int = 4
    iterations: int = 1000
    eval_every: int = 100
    noise_dim: int = 100
    kernel: int = 0                  # 0: library default
    critic_output: str = "linear"
    critic_batch_norm: bool = True
    generator_output: str = "sigmoid"
    capacity_mw: float = 16.0
    ramp_window_min: int = 30
    resume: bool = False
    seed: int = 0
    out: str = "out"


@dataclass
class GenerateConfig:
    checkpoint: str = ""
    count: int = 100
    per_class: int = 0
    label: int = -1                  # -1: unconditional / all classes
    seed: int = 0
    out: str = "out"


@dataclass
class EvaluateConfig:
    real: str = ""
    generated: str = ""
    labels: str = "none"
    shaping: str = "single_site_grid"
    grid_h: int = 24
    grid_w: int = 24
    capacity_mw: float = 16.0
    max_lag: int = 24
    ks_threshold: float = 0.1
    acf_threshold: float = 0.1
    corr_threshold: float = 0.15
    plots: bool = False
    seed: int = 0
    out: str = "out"


@dataclass
class BaselineConfig:
    data: str = ""
    count: int = 100
    shaping: str = "single_site_grid"
    grid_h: int = 24
    grid_w: int = 24
    capacity_mw: float = 16.0
    train_fraction: float = 1.0
    seed: int = 0
    out: str = "out"


COMMAND_CONFIGS = {
    "synth": SynthConfig,
    "train": TrainConfigFile,
    "generate": GenerateConfig,
    "evaluate": EvaluateConfig,
    "baseline": BaselineConfig,
}

_CHOICES = {
    ("synth", "kind"): ("diurnal_solar", "ar1_wind", "multi_site"),
    ("train", "labels"): ("none", "mean", "ramp", "month", "forecast_error"),
    ("train", "arch"): ("conv", "mlp"),
    ("train", "shaping"): ("single_site_grid", "multi_site_day"),
    ("train", "critic_output"): ("linear", "sigmoid"),
    ("train", "generator_output"): ("linear", "sigmoid"),
    ("evaluate", "labels"): ("none", "mean", "ramp", "month"),
    ("evaluate", "shaping"): ("single_site_grid", "multi_site_day"),
    ("baseline", "shaping"): ("single_site_grid", "multi_site_day"),
}


def load_command_config(command: str, config_path=None, overrides=None):
    """Build the command's config from file section plus flag overrides."""
    cls = COMMAND_CONFIGS[command]
    cfg = cls()
    known = {f.name: f.type for f in fields(cls)}

    if config_path:
        parser = configparser.ConfigParser()
        read = parser.read(config_path)
        if not read:
            raise ConfigurationError(f"config file {config_path} not found")
        if parser.has_section(command):
            for key, raw in parser.items(command):
                _set_field(cfg, command, key, raw)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _set_field(cfg, command, key, value)

    _validate(cfg, command)
    return cfg


def _set_field(cfg, command, key, raw):
    hints = {f.name: f.type for f in fields(type(cfg))}
    if key not in hints:
        raise ConfigurationError(f"unknown key {key!r} in [{command}]")
    current = getattr(cfg, key)
    if isinstance(current, bool):
        value = raw if isinstance(raw, bool) else _parse_bool(raw)
    elif isinstance(current, int):
        try:
            value = int(raw)
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"[{command}] {key} expects an integer, got {raw!r}") from err
    elif isinstance(current, float):
        try:
            value = float(raw)
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"[{command}] {key} expects a number, got {raw!r}") from err
    else:
        value = str(raw)
    setattr(cfg, key, value)


def _validate(cfg, command):
    for (cmd, key), choices in _CHOICES.items():
        if cmd == command and getattr(cfg, key) not in choices:
            raise ConfigurationError(
                f"[{command}] {key} must be one of {choices}, got {getattr(cfg, key)!r}"
            )
    for key in ("days", "count", "iterations", "eval_every", "batch_size"):
        if hasattr(cfg, key) and getattr(cfg, key) < 0:
            raise ConfigurationError(f"[{command}] {key} must be non-negative")


def config_hash(command: str, cfg) -> str:
    """Short provenance token over the effective configuration."""
    lines = sorted(f"{command}.{f.name}={getattr(cfg, f.name)}" for f in fields(cfg))
    digest = hashlib.sha256("\n".join(lines).encode()).hexdigest()
    return digest[:16]
