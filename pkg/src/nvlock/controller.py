"""Closed-loop frequency-lock controller.

Calibrates the dispersion slope k, the intrinsic range Gamma and the resonance
frequency from an open-loop sweep, converts demodulated voltage into frequency
and field corrections each cycle, flags lock loss, and provides the analytic
performance bounds (dynamic range, maximum tracking rate, cycle time).

Sign convention: k is the dispersion slope with respect to resonance
displacement, i.e. delta_v ~= k * (f_res - f_center) near lock, so the
correction f_center += delta_v/k re-centers the drive on the resonance.  On a
frequency sweep (resonance fixed, center swept) the measured slope is -k.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np


class NoResonanceError(ValueError):
    pass


class AmbiguousCrossingError(ValueError):
    pass


class RangeExhaustedError(RuntimeError):
    pass


@dataclass(frozen=True)
class CalibrationResult:
    """Dispersion slope, intrinsic range and resonance frequency of one lock."""

    k: float             # V/Hz, resonance-displacement sense (see module docstring)
    gamma_range: float   # nT, span between the dispersion extrema
    f_res: float         # Hz, central zero crossing
    gamma: float = 28.0  # Hz/nT, used for the voltage-to-field conversion

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("k must be nonzero")
        if self.gamma_range <= 0:
            raise ValueError("gamma_range must be positive")

    def to_dict(self) -> dict:
        return {"k": float(self.k), "gamma_range": float(self.gamma_range),
                "f_res": float(self.f_res), "gamma": float(self.gamma)}

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        return cls(k=float(d["k"]), gamma_range=float(d["gamma_range"]),
                   f_res=float(d["f_res"]), gamma=float(d.get("gamma", 28.0)))


@dataclass(frozen=True)
class LockState:
    """Per-loop controller state."""

    f_center: float      # Hz, absolute locked frequency
    b_est: float = 0.0   # nT
    locked: bool = True
    cycles: int = 0


@dataclass(frozen=True)
class TimingBudget:
    """Per-cycle processing times; pump settle and detector response overlap
    the demodulation window and are not additive."""

    pump_settle: float = 800e-9
    detector_response: float = 3.3e-6
    demod_time: float = 90e-6
    extract_delay: float = 8e-6
    compute_time: float = 1e-6
    hop_time: float = 600e-9

    def __post_init__(self):
        for name in ("pump_settle", "detector_response", "demod_time",
                     "extract_delay", "compute_time", "hop_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def calibrate(sweep, fit_window: float, gamma: float = 28.0) -> CalibrationResult:
    """Extract (k, Gamma, f_res) from an open-loop sweep of (f_center, delta_v).

    f_res is the interpolated central zero crossing, k the least-squares slope
    over +/- fit_window around it (negated into the resonance-displacement
    sense), and Gamma the frequency span between the dispersion extrema
    bracketing the crossing, converted to field via gamma.
    """
    data = np.asarray(sweep, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError("sweep needs at least 3 (frequency, volts) points")
    freqs, volts = data[:, 0], data[:, 1]
    if np.any(np.diff(freqs) <= 0):
        raise ValueError("frequency grid must be strictly increasing")

    sign = np.sign(volts)
    crossings = []
    for i in range(len(volts) - 1):
        if sign[i] == 0:
            crossings.append(freqs[i])
        elif sign[i] * sign[i + 1] < 0:
            f_c = freqs[i] - volts[i] * (freqs[i + 1] - freqs[i]) / (volts[i + 1] - volts[i])
            crossings.append(f_c)
    if sign[-1] == 0:
        crossings.append(freqs[-1])
    if not crossings:
        raise NoResonanceError("sweep has no zero crossing")

    center = 0.5 * (freqs[0] + freqs[-1])
    crossings = np.asarray(crossings)
    f_res = crossings[np.argmin(np.abs(crossings - center))]
    others = crossings[np.abs(crossings - f_res) > 0]
    if np.any(np.abs(others - f_res) <= fit_window):
        raise AmbiguousCrossingError("multiple zero crossings inside the fit window")

    mask = np.abs(freqs - f_res) <= fit_window
    if mask.sum() < 2:
        raise ValueError("fit window contains fewer than 2 sweep points")
    slope_vs_center = np.polyfit(freqs[mask], volts[mask], 1)[0]
    if slope_vs_center == 0:
        raise NoResonanceError("flat sweep inside the fit window")
    k = -slope_vs_center

    # extrema bracketing the crossing: nearest prominent turning points on
    # each side (plain diff-sign detection trips on quantization ripple)
    from scipy.signal import find_peaks
    prominence = 0.02 * np.max(np.abs(volts))
    peaks_hi, _ = find_peaks(volts, prominence=prominence)
    peaks_lo, _ = find_peaks(-volts, prominence=prominence)
    turning = np.sort(np.concatenate([peaks_hi, peaks_lo]))
    f_turn = freqs[turning]
    left = f_turn[f_turn < f_res]
    right = f_turn[f_turn > f_res]
    if left.size == 0 or right.size == 0:
        raise NoResonanceError("sweep does not bracket the dispersion extrema")
    gamma_range = (right.min() - left.max()) / gamma
    return CalibrationResult(k=k, gamma_range=gamma_range, f_res=f_res, gamma=gamma)


def step(delta_v: float, cal: CalibrationResult, state: LockState
         ) -> Tuple[float, float, LockState]:
    """One proportional-lock update: delta_f = delta_v/k, delta_b = delta_v/(k*gamma).

    If the implied per-cycle field change exceeds Gamma/2 the lock is lost: the
    flag drops and the center frequency and field estimate freeze.
    """
    if not state.locked:
        raise ValueError("step requires a locked state")
    delta_f = delta_v / cal.k
    delta_b = delta_v / (cal.k * cal.gamma)
    if abs(delta_b) > cal.gamma_range / 2.0:
        return delta_f, delta_b, replace(state, locked=False, cycles=state.cycles + 1)
    return delta_f, delta_b, replace(
        state, f_center=state.f_center + delta_f,
        b_est=state.b_est + delta_b, cycles=state.cycles + 1)


def dynamic_range(f_band: float, gamma: float) -> float:
    """Extended dynamic range in nT: synthesizer bandwidth over gamma."""
    if f_band <= 0 or gamma <= 0:
        raise ValueError("f_band and gamma must be positive")
    return f_band / gamma


def v_bmax(gamma_range: float, t_cycle: float) -> float:
    """Maximum trackable field slew rate in T/s: Gamma/(2*t_cycle)."""
    if gamma_range <= 0 or t_cycle <= 0:
        raise ValueError("gamma_range and t_cycle must be positive")
    return gamma_range * 1e-9 / (2.0 * t_cycle)


def cycle_time(budget: TimingBudget) -> float:
    """Closed-loop cycle time; measurement bandwidth is its inverse."""
    return budget.demod_time + budget.extract_delay + budget.compute_time + budget.hop_time
