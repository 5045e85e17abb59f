"""Streaming digital lock-in amplifier.

Square-wave in-phase/quadrature references, a moving-average DC rejector (one
modulation period long, so the reference frequency passes untouched while DC
and its leakage into the mixer are nulled), block-average decimation, and a
linear-phase FIR low-pass.  The decimator runs before the FIR so the filter
operates at the decimated rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.signal import firwin, lfilter


class UndefinedPhaseError(ValueError):
    pass


@dataclass(frozen=True)
class LockInConfig:
    """Digital LIA pipeline definition."""

    sample_rate: float = 60e6
    f_mod: float = 30e3
    reference_phase: float = np.pi
    decimation: int = 54
    filter_order: int = 100
    cutoff: float = 5e3            # FIR cutoff at the decimated rate, Hz
    extract_delay: float = 8e-6
    dc_reject: bool = True

    def __post_init__(self):
        if self.sample_rate <= 2.0 * self.f_mod:
            raise ValueError("sample_rate must exceed 2*f_mod")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if self.filter_order != 0 and (self.filter_order < 2 or self.filter_order % 2):
            raise ValueError("filter_order must be 0 (identity) or even and >= 2")

    @property
    def output_rate(self) -> float:
        return self.sample_rate / self.decimation


@dataclass(frozen=True)
class DemodSample:
    x: float
    y: float
    r: float
    theta: float


@dataclass(frozen=True)
class FirFilter:
    """Linear-phase unit-DC-gain FIR low-pass."""

    taps: np.ndarray
    nominal_cutoff: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        object.__setattr__(self, "taps", taps)
        if not np.allclose(taps, taps[::-1]):
            raise ValueError("taps must be symmetric (linear phase)")
        if abs(taps.sum() - 1.0) > 1e-9:
            raise ValueError("taps must sum to 1 (unit DC gain)")

    @property
    def order(self) -> int:
        return self.taps.size - 1


def design_fir(order: int, cutoff: float, rate: float) -> FirFilter:
    """Hamming-windowed-sinc low-pass with unit DC gain; order+1 taps."""
    if cutoff >= rate / 2.0:
        raise ValueError("cutoff must be below Nyquist")
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if order == 0:
        return FirFilter(np.array([1.0]), cutoff)
    if order < 2 or order % 2:
        raise ValueError("order must be 0 or even and >= 2")
    taps = firwin(order + 1, cutoff, fs=rate, window="hamming")
    taps = 0.5 * (taps + taps[::-1])  # enforce exact symmetry
    taps = taps / taps.sum()
    return FirFilter(taps, cutoff)


def phase_calibrate(x: float, y: float) -> float:
    """Phase of a demod sample; rotating the reference by -theta zeroes Y."""
    if x == 0.0 and y == 0.0:
        raise UndefinedPhaseError("phase undefined for (0, 0)")
    theta = float(np.arctan2(y, x))
    if theta == -np.pi:
        theta = np.pi
    return theta


def step_metrics(filt: FirFilter, output_rate: float) -> Tuple[float, float]:
    """(rise_time_10_90, settle_time) of the filter's unit-step response.

    Settle time is the span until the response stays within 1% of its final
    value; for a slim low-pass like this chain's the settle time is what
    bounds the demodulation slot of the cycle budget.
    """
    ts = 1.0 / output_rate
    y = np.cumsum(filt.taps)
    below = np.nonzero(y <= 0.1)[0]
    above = np.nonzero(y >= 0.9)[0]
    start = below[-1] if below.size else -1
    stop = above[0] if above.size else filt.taps.size - 1
    rise = max(stop - start, 1) * ts
    violating = np.nonzero(np.abs(y - 1.0) > 0.01)[0]
    settle = (violating[-1] + 1) * ts if violating.size else ts
    return rise, settle


def square_reference(start_index: int, count: int, cfg: LockInConfig,
                     quadrature: bool = False) -> np.ndarray:
    """Discrete square reference derived from the integer sample counter.

    Equivalent to modulation_sign at the sample instants but free of the
    floating-point edge jitter that t*f_mod accumulates over long streams.
    """
    period = int(round(cfg.sample_rate / cfg.f_mod))
    phase = cfg.reference_phase + (np.pi / 2.0 if quadrature else 0.0)
    offset = int(round(phase / (2.0 * np.pi) * period)) % period
    idx = (start_index + np.arange(count) + offset) % period
    return np.where(2 * idx < period, 1.0, -1.0)


class LockInDemodulator:
    """Stateful stream transducer: ADC samples in, decimated X/Y out."""

    def __init__(self, cfg: LockInConfig, filt: FirFilter):
        self.cfg = cfg
        self.filt = filt
        self._n = 0  # absolute input-sample index (defines the reference phase)
        self._period = int(round(cfg.sample_rate / cfg.f_mod))
        self._hist = None  # last period of samples for the DC rejector
        self._residue = np.empty(0)
        ntaps = filt.taps.size
        self._zi_x = np.zeros(ntaps - 1)
        self._zi_y = np.zeros(ntaps - 1)

    def _dc_reject(self, v: np.ndarray) -> np.ndarray:
        p = self._period
        if self._hist is None:
            self._hist = np.full(p, v[0])
        x = np.concatenate([self._hist, v])
        c = np.cumsum(x)
        moving = (c[p:] - c[:-p]) / p
        self._hist = x[-p:]
        return v - moving

    def process(self, samples) -> Tuple[np.ndarray, np.ndarray]:
        """Feed a block of input samples; return newly available (x, y) outputs."""
        v = np.asarray(samples, dtype=float)
        if v.size and self.cfg.dc_reject:
            v = self._dc_reject(v)
        ref_x = square_reference(self._n, v.size, self.cfg)
        ref_y = square_reference(self._n, v.size, self.cfg, quadrature=True)
        self._n += v.size
        mix_x = v * ref_x
        mix_y = v * ref_y
        d = self.cfg.decimation
        mix = np.stack([mix_x, mix_y])
        if self._residue.size:
            mix = np.concatenate([self._residue, mix], axis=1)
        nblocks = mix.shape[1] // d
        self._residue = mix[:, nblocks * d:]
        if nblocks == 0:
            return np.empty(0), np.empty(0)
        blocks = mix[:, :nblocks * d].reshape(2, nblocks, d).mean(axis=2)
        x_out, self._zi_x = lfilter(self.filt.taps, [1.0], blocks[0], zi=self._zi_x)
        y_out, self._zi_y = lfilter(self.filt.taps, [1.0], blocks[1], zi=self._zi_y)
        return x_out, y_out


def demodulate(samples, cfg: LockInConfig, filt: FirFilter) -> List[DemodSample]:
    """Batch demodulation returning DemodSample records at the decimated rate."""
    demod = LockInDemodulator(cfg, filt)
    x, y = demod.process(samples)
    out = []
    for xi, yi in zip(x, y):
        r = float(np.hypot(xi, yi))
        theta = phase_calibrate(xi, yi) if r > 0 else 0.0
        out.append(DemodSample(float(xi), float(yi), r, theta))
    return out
