"""Offline trace analysis: noise spectra, tracking rates, linearity, std."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.signal import welch

DEFAULT_FLOOR_BAND = (10.0, 1000.0)
MAINS_FREQ = 50.0
MAINS_GUARD = 2.0  # Hz each side of 50 Hz and harmonics excluded from the floor


@dataclass(frozen=True)
class AsdResult:
    frequencies: np.ndarray  # Hz
    asd: np.ndarray          # nT/rtHz
    floor: float             # nT/rtHz, mean over the stated band

    def dominant_frequency(self, f_min: float = 1.0) -> float:
        """Frequency of the largest spectral component above f_min."""
        mask = self.frequencies >= f_min
        return float(self.frequencies[mask][np.argmax(self.asd[mask])])


@dataclass(frozen=True)
class LinearityResult:
    slope: float                 # nT per A
    intercept: float             # nT
    nonlinearity_percent: float
    residuals: np.ndarray        # nT


def asd_welch(trace, rate: float, segment_len: int = 1024, overlap: float = 0.5,
              floor_band: Tuple[float, float] = DEFAULT_FLOOR_BAND) -> AsdResult:
    """One-sided amplitude spectral density via Welch/Hann averaging.

    The floor is the mean ASD over floor_band, excluding bins within
    +/- 2 Hz of 50 Hz and its harmonics (ambient mains pickup).
    """
    x = np.asarray(trace, dtype=float)
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    if x.size < 2 * segment_len:
        raise ValueError("trace shorter than 2 segments")
    freqs, psd = welch(x, fs=rate, window="hann", nperseg=segment_len,
                       noverlap=int(overlap * segment_len), detrend="constant")
    asd = np.sqrt(psd)
    band = (freqs >= floor_band[0]) & (freqs <= floor_band[1])
    harmonic = np.minimum(freqs % MAINS_FREQ, MAINS_FREQ - freqs % MAINS_FREQ)
    band &= harmonic > MAINS_GUARD
    floor = float(asd[band].mean()) if band.any() else float("nan")
    return AsdResult(frequencies=freqs, asd=asd, floor=floor)


def tracking_rate(t, b, window: Tuple[float, float] | None = None) -> float:
    """Least-squares slope of the field trace (nT vs s) over a time window, in T/s."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, b = t[mask], b[mask]
    if t.size < 3 or np.ptp(t) == 0:
        raise ValueError("window must contain at least 3 samples with distinct times")
    return float(np.polyfit(t, b, 1)[0]) * 1e-9


def max_tracking_rate(t, b, window_samples: int) -> float:
    """Largest |slope| of a sliding linear fit, in T/s (edge-rate estimator)."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    w = int(window_samples)
    if w < 3 or t.size < w:
        raise ValueError("need a window of >= 3 samples inside the trace")
    # sliding least-squares slope via cumulative sums
    n = t.size - w + 1
    idx = np.arange(w)
    slopes = np.empty(n)
    tc = t - t[0]
    for i in range(n):
        tt = tc[i:i + w]
        bb = b[i:i + w]
        tm = tt.mean()
        slopes[i] = np.dot(tt - tm, bb - bb.mean()) / np.dot(tt - tm, tt - tm)
    return float(np.max(np.abs(slopes))) * 1e-9


def nonlinearity(points: Sequence[Tuple[float, float]]) -> LinearityResult:
    """Linear fit of measured amplitude (nT) vs drive current (A).

    nonlinearity_percent = max|residual| / span of fitted values * 100.
    """
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError("need at least 3 (current, amplitude) points")
    current, amp = data[:, 0], data[:, 1]
    if np.unique(current).size < 2:
        raise ValueError("currents are rank-deficient (all identical)")
    slope, intercept = np.polyfit(current, amp, 1)
    fitted = slope * current + intercept
    residuals = amp - fitted
    span = float(np.ptp(fitted))
    if span == 0:
        raise ValueError("fitted span is zero")
    pct = float(np.max(np.abs(residuals)) / span * 100.0)
    return LinearityResult(slope=float(slope), intercept=float(intercept),
                           nonlinearity_percent=pct, residuals=residuals)


def trace_std(trace, reference) -> float:
    """Standard deviation of (trace - reference), both in nT."""
    a = np.asarray(trace, dtype=float)
    b = np.asarray(reference, dtype=float)
    if a.shape != b.shape:
        raise ValueError("trace and reference lengths differ")
    return float(np.std(a - b))


def sine_amplitude(t, b, frequency: float) -> float:
    """Amplitude of the component at `frequency` via least-squares quadrature fit."""
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    design = np.column_stack([np.sin(2 * np.pi * frequency * t),
                              np.cos(2 * np.pi * frequency * t),
                              np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, b, rcond=None)
    return float(np.hypot(coef[0], coef[1]))
