"""NV ensemble physics: spin resonance frequencies and fluorescence response.

Models the resonance frequency of one Zeeman branch under magnetic field and
temperature, the relative fluorescence produced by a set of microwave drive
tones (Lorentzian dips on the three hyperfine lines), and the photodetector /
ADC front end that turns fluorescence into quantized voltage samples.

Units: frequencies Hz, field nT, temperature K, current A, voltage V, time s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NvParams:
    """Physical constants and lineshape parameters of the NV ensemble."""

    d_gs: float = 2.87e9          # zero-field splitting, Hz
    gamma: float = 28.0           # Zeeman shift, Hz/nT
    beta: float = -74e3           # temperature shift, Hz/K
    a_hf: float = 2.16e6          # hyperfine splitting, Hz
    linewidth_fwhm: float = 1.0e6  # per hyperfine line, Hz
    contrast: float = 0.05        # dip depth per line, fraction
    branch: str = "plus"          # which Zeeman branch is locked

    def __post_init__(self):
        if self.d_gs <= 0 or self.gamma <= 0 or self.a_hf <= 0:
            raise ValueError("d_gs, gamma and a_hf must be positive")
        if self.linewidth_fwhm <= 0:
            raise ValueError("linewidth_fwhm must be positive")
        if not 0.0 < self.contrast < 1.0:
            raise ValueError("contrast must be in (0, 1)")
        if 3.0 * self.contrast >= 1.0:
            raise ValueError("total dip depth 3*contrast must stay below 1")
        if self.branch not in ("plus", "minus"):
            raise ValueError("branch must be 'plus' or 'minus'")

    @property
    def branch_sign(self) -> float:
        return 1.0 if self.branch == "plus" else -1.0


@dataclass(frozen=True)
class FieldState:
    """Magnetic field projection on the locked NV axis plus temperature offset."""

    b_nv: float = 0.0     # nT, signed
    delta_t: float = 0.0  # K

    def __post_init__(self):
        if not (np.isfinite(self.b_nv) and np.isfinite(self.delta_t)):
            raise ValueError("field state values must be finite")


@dataclass(frozen=True)
class OpticalChain:
    """Photodetector and ADC front-end parameters.

    dc_offset_current models the balanced-detection reference arm: the ADC sees
    (photocurrent - dc_offset_current) * transimpedance, which keeps the signal
    inside the converter's full scale.  include_pump_pole adds a second
    low-pass pole at 1/(2*pi*pump_settle_time) for the laser pumping response.
    """

    photocurrent_dc: float = 10.6e-6    # A
    detector_bandwidth: float = 0.3e6   # Hz
    pump_settle_time: float = 800e-9    # s
    adc_bits: int = 12
    adc_full_scale: float = 8.0         # V, total span (bipolar)
    transimpedance: float = 2.0e6       # V/A
    dc_offset_current: float = 9.9e-6   # A, subtracted before the ADC
    include_pump_pole: bool = False

    def __post_init__(self):
        if self.detector_bandwidth <= 0:
            raise ValueError("detector_bandwidth must be positive")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")
        if self.pump_settle_time < 0:
            raise ValueError("pump_settle_time must be >= 0")
        if self.adc_full_scale <= 0 or self.transimpedance <= 0:
            raise ValueError("adc_full_scale and transimpedance must be positive")

    @property
    def lsb(self) -> float:
        return self.adc_full_scale / 2 ** self.adc_bits

    @property
    def code_min(self) -> int:
        return -(2 ** (self.adc_bits - 1))

    @property
    def code_max(self) -> int:
        return 2 ** (self.adc_bits - 1) - 1


def resonance_frequency(fld: FieldState, params: NvParams) -> float:
    """Resonance frequency of the locked branch: d_gs + beta*dT +/- gamma*B."""
    return params.d_gs + params.beta * fld.delta_t + params.branch_sign * params.gamma * fld.b_nv


def resonance_frequency_of(b_nv, params: NvParams, delta_t=0.0):
    """Vectorized resonance frequency for an array of field values (nT)."""
    return params.d_gs + params.beta * delta_t + params.branch_sign * params.gamma * np.asarray(b_nv)


def fluorescence_rate(drive_tones, f_res, params: NvParams, weights=None):
    """Relative fluorescence under a set of drive tones.

    Each tone digs a Lorentzian dip of depth contrast (scaled by its weight)
    into each of the three hyperfine lines at f_res + m*a_hf, m in {-1,0,+1}.
    Result is clamped to [0, 1].  Tones and f_res may be scalars or arrays
    (broadcast together).
    """
    tones = list(drive_tones)
    if len(tones) == 0:
        raise ValueError("drive_tones must be non-empty")
    if weights is None:
        weights = [1.0] * len(tones)
    if len(weights) != len(tones):
        raise ValueError("weights must match drive_tones in length")
    hwhm = params.linewidth_fwhm / 2.0
    f_res = np.asarray(f_res, dtype=float)
    dip = np.zeros(np.broadcast(f_res, np.asarray(tones[0])).shape)
    for tone, w in zip(tones, weights):
        delta = np.asarray(tone, dtype=float) - f_res
        for m in (-1.0, 0.0, 1.0):
            x = (delta - m * params.a_hf) / hwhm
            dip = dip + w / (1.0 + x * x)
    rate = 1.0 - params.contrast * dip
    return np.clip(rate, 0.0, 1.0)


def _one_pole_coeffs(bandwidth: float, sample_rate: float):
    # difference equation y[n] = a*x[n] + (1-a)*y[n-1]
    alpha = 1.0 - np.exp(-2.0 * np.pi * bandwidth / sample_rate)
    return np.array([alpha]), np.array([1.0, alpha - 1.0])


@dataclass
class PhotoDetector:
    """Streaming fluorescence-to-ADC-code converter.

    Applies the detector single-pole low-pass to rate*photocurrent_dc, adds
    white Gaussian current noise of one-sided ASD noise_asd (scaled to the
    sample rate), subtracts the balanced-detection offset, converts through the
    transimpedance amplifier and quantizes.  Deterministic for a fixed seed.
    """

    chain: OpticalChain
    sample_rate: float
    noise_asd: float = 0.0
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)
    _zi: np.ndarray = field(init=False, repr=False)
    _zi2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_asd < 0:
            raise ValueError("noise_asd must be >= 0")
        self._rng = np.random.default_rng(self.seed)
        self._zi = np.zeros(1)
        self._zi2 = np.zeros(1)
        object.__setattr__(self, "_fresh", True)

    def process(self, rate_samples):
        """Return (adc_codes, saturated) for a block of relative-rate samples."""
        from scipy.signal import lfilter

        current = np.asarray(rate_samples, dtype=float) * self.chain.photocurrent_dc
        if self.noise_asd > 0:
            # white current noise shares the detector response (added pre-filter)
            sigma = self.noise_asd * np.sqrt(self.sample_rate / 2.0)
            current = current + sigma * self._rng.standard_normal(current.size)
        b, a = _one_pole_coeffs(self.chain.detector_bandwidth, self.sample_rate)
        fresh = self._fresh and current.size
        if fresh:
            # start the low-pass settled at the first sample's level
            self._zi = (1.0 - b[0]) * current[:1]
            self._fresh = False
        current, self._zi = lfilter(b, a, current, zi=self._zi)
        if self.chain.include_pump_pole and self.chain.pump_settle_time > 0:
            bw2 = 1.0 / (2.0 * np.pi * self.chain.pump_settle_time)
            b2, a2 = _one_pole_coeffs(bw2, self.sample_rate)
            if fresh:
                self._zi2 = (1.0 - b2[0]) * current[:1]
            current, self._zi2 = lfilter(b2, a2, current, zi=self._zi2)
        volts = (current - self.chain.dc_offset_current) * self.chain.transimpedance
        codes = np.round(volts / self.chain.lsb)
        saturated = (codes < self.chain.code_min) | (codes > self.chain.code_max)
        codes = np.clip(codes, self.chain.code_min, self.chain.code_max)
        return codes.astype(np.int64), saturated


def photocurrent_stream(rate_samples, chain: OpticalChain, sample_rate: float,
                        noise_asd: float = 0.0, rng_seed: int = 0):
    """One-shot wrapper around PhotoDetector for batch input."""
    det = PhotoDetector(chain, sample_rate, noise_asd, rng_seed)
    return det.process(rate_samples)
