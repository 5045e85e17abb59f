"""Frequency-agile FM microwave synthesizer model.

Produces the instantaneous drive frequency F_a = f_lo + f_0 + f_dev*sgn(sin(
2*pi*f_mod*t)) + f_agile, expands it into the active tone set (one tone for
single-frequency modulation, three hyperfine-spaced tones for three-frequency
modulation), and handles frequency-hop requests with a fixed latency and
band-edge checking.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

A_HF_DEFAULT = 2.16e6


class BandEdgeError(ValueError):
    """Hop target outside the synthesizer band; carries the overflow in Hz."""

    def __init__(self, target: float, band: Tuple[float, float]):
        self.target = target
        self.band = band
        if target > band[1]:
            self.overflow = target - band[1]
        else:
            self.overflow = target - band[0]
        super().__init__(
            f"hop target {target:.6g} Hz outside band [{band[0]:.6g}, {band[1]:.6g}] Hz "
            f"(overflow {self.overflow:+.6g} Hz)")


@dataclass(frozen=True)
class ModulationConfig:
    """Square-wave FM drive definition."""

    mode: str = "sfm"        # "sfm" or "tfm"
    f_dev: float = 3.0e6     # Hz (3 MHz sfm, 0.5 MHz tfm)
    f_mod: float = 30e3      # Hz
    a_hf: float = A_HF_DEFAULT
    tone_weights: Tuple[float, ...] = (1.0, 1.0, 1.0)  # tfm sideband weights

    def __post_init__(self):
        if self.mode not in ("sfm", "tfm"):
            raise ValueError("mode must be 'sfm' or 'tfm'")
        if self.f_dev <= 0 or self.f_mod <= 0:
            raise ValueError("f_dev and f_mod must be positive")


@dataclass(frozen=True)
class SpurModel:
    """Image-tone imperfection of the single-sideband upconversion."""

    enabled: bool = False
    suppression: float = 30.0  # dBc

    def __post_init__(self):
        if self.suppression <= 0:
            raise ValueError("suppression must be positive")

    @property
    def power(self) -> float:
        return 10.0 ** (-self.suppression / 10.0)


@dataclass(frozen=True)
class SynthState:
    """Agile synthesizer state; band expressed in f_agile space."""

    f_lo: float = 2.741e9
    f_0: float = 9.0e6
    f_agile: float = 120.0e6
    band: Tuple[float, float] = (60.0e6, 180.0e6)
    hop_latency: float = 600e-9
    pending_hop: Optional[Tuple[float, float]] = None  # (target, effective time)

    def __post_init__(self):
        if self.hop_latency < 0:
            raise ValueError("hop_latency must be >= 0")
        if not self.band[0] <= self.f_agile <= self.band[1]:
            raise BandEdgeError(self.f_agile, self.band)

    @property
    def f_band(self) -> float:
        return self.band[1] - self.band[0]

    @property
    def f_center(self) -> float:
        """Absolute MW center frequency (FM deviation averaged out)."""
        return self.f_lo + self.f_0 + self.f_agile


def modulation_sign(t, f_mod: float, phase: float = 0.0):
    """Square-wave modulation sign sgn(sin(2*pi*f_mod*t + phase)), sgn(0)=+1."""
    # strict < keeps the sampled square exactly balanced over a period
    frac = (np.asarray(t, dtype=float) * f_mod + phase / (2.0 * np.pi)) % 1.0
    return np.where(frac < 0.5, 1.0, -1.0)


def instantaneous_frequency(t, synth: SynthState, mod: ModulationConfig):
    """Instantaneous drive frequency F_a at time t (pending hops must be applied)."""
    return synth.f_lo + synth.f_0 + synth.f_agile + mod.f_dev * modulation_sign(t, mod.f_mod)


def drive_tones(f_a: float, mod: ModulationConfig, spur: SpurModel = SpurModel()):
    """Expand the instantaneous frequency into (frequency, relative power) tones."""
    if f_a <= 0:
        raise ValueError("f_a must be positive")
    if mod.mode == "sfm":
        tones = [(f_a, 1.0)]
    else:
        w = mod.tone_weights
        tones = [(f_a - mod.a_hf, w[0]), (f_a, w[1]), (f_a + mod.a_hf, w[2])]
    if spur.enabled:
        # representative upconversion image: deviation mirrored about the carrier
        tones.append((f_a - 2.0 * mod.f_dev, spur.power))
    return tones


def request_hop(target_f_agile: float, t_now: float, synth: SynthState) -> SynthState:
    """Schedule a hop to target_f_agile, effective hop_latency after t_now."""
    if synth.pending_hop is not None and t_now < synth.pending_hop[1]:
        raise ValueError("a hop is already in flight")
    if not synth.band[0] <= target_f_agile <= synth.band[1]:
        raise BandEdgeError(target_f_agile, synth.band)
    return replace(synth, pending_hop=(target_f_agile, t_now + synth.hop_latency))


def apply_pending(synth: SynthState, t: float) -> SynthState:
    """Apply a pending hop whose effective time has passed."""
    if synth.pending_hop is not None and t >= synth.pending_hop[1]:
        return replace(synth, f_agile=synth.pending_hop[0], pending_hop=None)
    return synth
