"""YAML config loading/saving for simulation runs.

Two presets ship with the package: "sfm" (single-frequency modulation) and
"tfm" (three-frequency modulation).  A config file may be referenced by preset
name or by path; scenario overrides are applied on top of the base mapping.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import stimulus
from .controller import CalibrationResult, TimingBudget
from .engine import SimConfig
from .lockin import LockInConfig
from .mw import ModulationConfig, SpurModel, SynthState
from .nv import NvParams, OpticalChain

PRESETS = ("sfm", "tfm")


class ConfigError(ValueError):
    pass


def _floats(d: dict, int_keys=()) -> dict:
    """Coerce leaf values: YAML sometimes leaves exponent notation as strings."""
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _floats(v, int_keys)
        elif isinstance(v, list):
            out[k] = v
        elif isinstance(v, bool) or v is None:
            out[k] = v
        elif k in int_keys:
            out[k] = int(v)
        else:
            try:
                out[k] = float(v)
            except (TypeError, ValueError):
                out[k] = v
    return out


_INT_KEYS = ("adc_bits", "decimation", "filter_order", "seed", "sweep_points")


def preset_path(name: str) -> Path:
    return Path(resources.files("nvlock").joinpath(f"configs/{name}.yaml"))


def load_dict(source) -> dict:
    """Load a raw config mapping from a preset name or a file path."""
    if isinstance(source, str) and source in PRESETS:
        path = preset_path(source)
    else:
        path = Path(source)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} is not a mapping")
    return _floats(raw, _INT_KEYS)


def merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


def config_from_dict(d: dict) -> SimConfig:
    """Build a SimConfig from a raw mapping; reports the offending field."""
    try:
        nv = NvParams(**d.get("nv", {}))
        optics = OpticalChain(**d.get("optics", {}))
        s = dict(d.get("synth", {}))
        center = s.pop("f_agile_center", 120.0e6)
        f_band = s.pop("f_band", 120.0e6)
        synth = SynthState(f_lo=s.get("f_lo", 2.741e9), f_0=s.get("f_0", 9.0e6),
                           f_agile=center,
                           band=(center - f_band / 2.0, center + f_band / 2.0),
                           hop_latency=s.get("hop_latency", 600e-9))
        mod = ModulationConfig(mode=d.get("mode", "sfm"), **d.get("mod", {}))
        lk = dict(d.get("lockin", {}))
        lk.setdefault("f_mod", mod.f_mod)
        lockin = LockInConfig(**lk)
        budget = TimingBudget(**d.get("budget", {}))
        spur = SpurModel(**d.get("spur", {})) if "spur" in d else SpurModel()
        waveform = stimulus.from_dict(d.get("waveform", {"variant": "dc"}))
        return SimConfig(
            duration=d.get("duration", 0.1), seed=int(d.get("seed", 1)),
            nv=nv, optics=optics, synth=synth, mod=mod, lockin=lockin,
            budget=budget, waveform=waveform,
            noise_asd=d.get("noise_asd", 0.0), spur=spur,
            fit_window=d.get("fit_window", 2.5e6),
            sweep_span=d.get("sweep_span", 12e6),
            sweep_points=int(d.get("sweep_points", 241)),
            scale_factor=d.get("scale_factor", 1.0),
            delta_t0=d.get("delta_t0", 0.0),
            delta_t_rate=d.get("delta_t_rate", 0.0))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid config: {e}") from e


def load_config(source, overrides: dict | None = None) -> SimConfig:
    raw = load_dict(source)
    if overrides:
        raw = merge(raw, overrides)
    return config_from_dict(raw)


def config_hash(raw: dict) -> str:
    """Stable hash of a config mapping (identical config -> identical hash)."""
    canon = json.dumps(raw, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def save_calibration(path, cal: CalibrationResult) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(cal.to_dict(), f, sort_keys=True)


def load_calibration(path) -> CalibrationResult:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"calibration file not found: {p}")
    with open(p) as f:
        d = yaml.safe_load(f)
    return CalibrationResult.from_dict(_floats(d))
