"""True magnetic-field waveforms applied to the NV axis.

DC levels, steps, sinusoids, square waves with a first-order coil ramp,
mains-harmonic combs, seeded band-limited noise and composites.  All field
values in nT, times in s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np


class UnsupportedWaveformError(ValueError):
    pass


@dataclass(frozen=True)
class Dc:
    level: float = 0.0


@dataclass(frozen=True)
class Step:
    level0: float
    level1: float
    t_step: float


@dataclass(frozen=True)
class Sine:
    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")


@dataclass(frozen=True)
class Square:
    """Square wave through a first-order coil response (time constant coil_tau).

    Evaluated in periodic steady state: each half period relaxes exponentially
    from the level reached at the last transition toward +/- amplitude.
    """

    amplitude: float
    frequency: float
    coil_tau: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.coil_tau < 0:
            raise ValueError("coil_tau must be >= 0")


@dataclass(frozen=True)
class Harmonics:
    """Sum of sin(2*pi*k*f*t) terms, k = 1..len(amplitudes)."""

    fundamental: float
    amplitudes: Tuple[float, ...]

    def __post_init__(self):
        if self.fundamental <= 0:
            raise ValueError("fundamental must be positive")
        object.__setattr__(self, "amplitudes", tuple(self.amplitudes))


@dataclass(frozen=True)
class Composite:
    members: Tuple[object, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("composite must be non-empty")
        object.__setattr__(self, "members", tuple(self.members))


@dataclass(frozen=True)
class NoiseField:
    """White field noise of one-sided ASD asd (nT/rtHz), held at rate hold_rate."""

    asd: float
    seed: int = 0
    hold_rate: float = 10e3

    def __post_init__(self):
        if self.asd < 0 or self.hold_rate <= 0:
            raise ValueError("asd must be >= 0 and hold_rate positive")


def b_at(t, spec):
    """Evaluate the field waveform at time(s) t (scalar or array), in nT."""
    t = np.asarray(t, dtype=float)
    if isinstance(spec, Dc):
        return np.full(t.shape, spec.level) if t.ndim else float(spec.level)
    if isinstance(spec, Step):
        return np.where(t < spec.t_step, spec.level0, spec.level1)
    if isinstance(spec, Sine):
        return spec.offset + spec.amplitude * np.sin(
            2.0 * np.pi * spec.frequency * t + spec.phase)
    if isinstance(spec, Square):
        return spec.offset + _square(t, spec)
    if isinstance(spec, Harmonics):
        out = np.zeros(t.shape)
        for k, a in enumerate(spec.amplitudes, start=1):
            out = out + a * np.sin(2.0 * np.pi * k * spec.fundamental * t)
        return out
    if isinstance(spec, Composite):
        return sum(b_at(t, m) for m in spec.members)
    if isinstance(spec, NoiseField):
        return _noise(t, spec)
    raise UnsupportedWaveformError(f"unknown waveform {type(spec).__name__}")


def _square(t, spec: Square):
    half = 0.5 / spec.frequency
    n = np.floor(t / half).astype(np.int64)
    target = np.where(n % 2 == 0, spec.amplitude, -spec.amplitude)
    if spec.coil_tau == 0.0:
        return target
    # steady-state level reached at each transition
    a_ss = spec.amplitude * np.tanh(half / (2.0 * spec.coil_tau))
    t_in = t - n * half
    return target + (-target * a_ss / spec.amplitude - target) * np.exp(-t_in / spec.coil_tau)


def _noise(t, spec: NoiseField):
    # deterministic: sample index addresses a seeded counter-based draw
    idx = np.floor(t * spec.hold_rate).astype(np.int64)
    sigma = spec.asd * np.sqrt(spec.hold_rate / 2.0)
    flat = np.atleast_1d(idx)
    uniq, inverse = np.unique(flat, return_inverse=True)
    draws = np.empty(uniq.size)
    for i, n in enumerate(uniq):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, int(n)]))
        draws[i] = sigma * rng.standard_normal()
    out = draws[inverse].reshape(flat.shape)
    return out if np.asarray(t).ndim else float(out[0])


def max_slew(spec) -> float:
    """Analytic maximum |dB/dt| in T/s for noise-free waveforms."""
    if isinstance(spec, Dc):
        return 0.0
    if isinstance(spec, Step):
        return 0.0 if spec.level0 == spec.level1 else np.inf
    if isinstance(spec, Sine):
        return 2.0 * np.pi * spec.frequency * abs(spec.amplitude) * 1e-9
    if isinstance(spec, Square):
        if spec.coil_tau == 0.0:
            return np.inf
        return 2.0 * abs(spec.amplitude) * 1e-9 / spec.coil_tau
    if isinstance(spec, Harmonics):
        return 2.0 * np.pi * spec.fundamental * sum(
            k * abs(a) for k, a in enumerate(spec.amplitudes, start=1)) * 1e-9
    if isinstance(spec, Composite):
        return sum(max_slew(m) for m in spec.members)
    raise UnsupportedWaveformError("max_slew is undefined for noise waveforms")


def to_dict(spec) -> dict:
    if isinstance(spec, Dc):
        return {"variant": "dc", "level": spec.level}
    if isinstance(spec, Step):
        return {"variant": "step", "level0": spec.level0,
                "level1": spec.level1, "t_step": spec.t_step}
    if isinstance(spec, Sine):
        return {"variant": "sine", "amplitude": spec.amplitude,
                "frequency": spec.frequency, "phase": spec.phase, "offset": spec.offset}
    if isinstance(spec, Square):
        return {"variant": "square", "amplitude": spec.amplitude,
                "frequency": spec.frequency, "coil_tau": spec.coil_tau,
                "offset": spec.offset}
    if isinstance(spec, Harmonics):
        return {"variant": "harmonics", "fundamental": spec.fundamental,
                "amplitudes": list(spec.amplitudes)}
    if isinstance(spec, Composite):
        return {"variant": "composite", "members": [to_dict(m) for m in spec.members]}
    if isinstance(spec, NoiseField):
        return {"variant": "noise", "asd": spec.asd, "seed": spec.seed,
                "hold_rate": spec.hold_rate}
    raise UnsupportedWaveformError(f"unknown waveform {type(spec).__name__}")


def from_dict(d: dict):
    v = d.get("variant")
    if v == "dc":
        return Dc(level=float(d.get("level", 0.0)))
    if v == "step":
        return Step(level0=float(d["level0"]), level1=float(d["level1"]),
                    t_step=float(d["t_step"]))
    if v == "sine":
        return Sine(amplitude=float(d["amplitude"]), frequency=float(d["frequency"]),
                    phase=float(d.get("phase", 0.0)), offset=float(d.get("offset", 0.0)))
    if v == "square":
        return Square(amplitude=float(d["amplitude"]), frequency=float(d["frequency"]),
                      coil_tau=float(d.get("coil_tau", 0.0)),
                      offset=float(d.get("offset", 0.0)))
    if v == "harmonics":
        return Harmonics(fundamental=float(d["fundamental"]),
                         amplitudes=tuple(float(a) for a in d["amplitudes"]))
    if v == "composite":
        return Composite(tuple(from_dict(m) for m in d["members"]))
    if v == "noise":
        return NoiseField(asd=float(d["asd"]), seed=int(d.get("seed", 0)),
                          hold_rate=float(d.get("hold_rate", 10e3)))
    raise UnsupportedWaveformError(f"unknown waveform variant {v!r}")
