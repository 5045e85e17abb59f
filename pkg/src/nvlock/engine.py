"""Closed-loop simulation engine.

Runs the whole chain on a single sample clock: stimulus -> resonance ->
multi-tone fluorescence -> detector/ADC -> lock-in -> per-cycle controller
step -> synthesizer hop.  Also provides the open-loop ODMR sweep used for
calibration.

A scale_factor > 1 shrinks the sample rate and decimation together, keeping
samples-per-modulation-period, per-tap and per-cycle ratios intact so fast
test runs preserve the loop dynamics.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import controller as ctl
from . import stimulus
from .lockin import FirFilter, LockInConfig, LockInDemodulator, design_fir
from .mw import (BandEdgeError, ModulationConfig, SpurModel, SynthState,
                 apply_pending, drive_tones, request_hop)
from .nv import NvParams, OpticalChain, PhotoDetector

STATUS_OK = "ok"
STATUS_LOCK_LOST = "lock-lost"
STATUS_RANGE_EXHAUSTED = "range-exhausted"

TRACE_COLUMNS = ("t_s", "delta_v_volts", "f_center_hz", "b_est_nt",
                 "b_true_nt", "locked", "saturated")


class TraceSchemaError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Full description of one closed-loop run."""

    duration: float = 0.1
    seed: int = 1
    nv: NvParams = field(default_factory=NvParams)
    optics: OpticalChain = field(default_factory=OpticalChain)
    synth: SynthState = field(default_factory=SynthState)
    mod: ModulationConfig = field(default_factory=ModulationConfig)
    lockin: LockInConfig = field(default_factory=LockInConfig)
    budget: ctl.TimingBudget = field(default_factory=ctl.TimingBudget)
    waveform: object = field(default_factory=stimulus.Dc)
    noise_asd: float = 0.0          # A/rtHz at the photodetector
    spur: SpurModel = field(default_factory=SpurModel)
    fit_window: float = 2.5e6       # Hz, calibration fit half-width
    sweep_span: float = 12e6        # Hz, calibration sweep width
    sweep_points: int = 241
    scale_factor: float = 1.0
    delta_t0: float = 0.0           # K, temperature offset at t=0
    delta_t_rate: float = 0.0       # K/s, optional slow drift

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.scale_factor < 1:
            raise ValueError("scale_factor must be >= 1")
        if self.mod.f_mod != self.lockin.f_mod:
            raise ValueError("modulation and lock-in f_mod must match")

    @property
    def mode(self) -> str:
        return self.mod.mode

    def effective_lockin(self) -> LockInConfig:
        """Lock-in config at the scaled sample clock."""
        s = self.scale_factor
        return replace(self.lockin,
                       sample_rate=self.lockin.sample_rate / s,
                       decimation=max(1, int(round(self.lockin.decimation / s))))


@dataclass(frozen=True)
class TraceRecord:
    t: float
    delta_v: float
    f_center: float
    b_est: float
    b_true: float
    locked: bool
    saturated: bool


@dataclass(frozen=True)
class RunResult:
    records: List[TraceRecord]
    status: str
    cal: ctl.CalibrationResult
    cycle_time: float

    def column(self, name: str) -> np.ndarray:
        attr = {"t_s": "t", "delta_v_volts": "delta_v", "f_center_hz": "f_center",
                "b_est_nt": "b_est", "b_true_nt": "b_true", "locked": "locked",
                "saturated": "saturated"}[name]
        return np.array([getattr(r, attr) for r in self.records])

    @property
    def t(self) -> np.ndarray:
        return self.column("t_s")

    @property
    def b_est(self) -> np.ndarray:
        return self.column("b_est_nt")

    @property
    def b_true(self) -> np.ndarray:
        return self.column("b_true_nt")

    @property
    def f_center(self) -> np.ndarray:
        return self.column("f_center_hz")

    @property
    def locked(self) -> np.ndarray:
        return self.column("locked").astype(bool)

    def to_csv(self, path) -> None:
        write_trace(path, self.records)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace(path, records: List[TraceRecord]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for r in records:
            f.write(",".join([_fmt(r.t), _fmt(r.delta_v), _fmt(r.f_center),
                              _fmt(r.b_est), _fmt(r.b_true),
                              str(int(r.locked)), str(int(r.saturated))]) + "\n")


def read_trace(path) -> dict:
    """Read a trace CSV into a dict of numpy arrays; validates the schema."""
    with open(path) as f:
        header = f.readline().strip()
        if header.split(",") != list(TRACE_COLUMNS):
            raise TraceSchemaError(f"unexpected trace header: {header!r}")
        body = f.read()
    if not body.strip():
        raise TraceSchemaError("trace contains no records")
    try:
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    except ValueError as e:
        raise TraceSchemaError(f"malformed trace data: {e}") from e
    if data.shape[1] != len(TRACE_COLUMNS):
        raise TraceSchemaError("trace column count mismatch")
    return {name: data[:, i] for i, name in enumerate(TRACE_COLUMNS)}


def _drive_sign(n0: int, count: int, period: int) -> np.ndarray:
    """Modulation sign from the integer sample counter (no float edge jitter)."""
    idx = (n0 + np.arange(count)) % period
    return np.where(2 * idx < period, 1.0, -1.0)


class _Lineshape:
    """Vectorized dip evaluator: precomputed (offset, weight) Lorentzian list."""

    def __init__(self, nv: NvParams, mod: ModulationConfig, spur: SpurModel):
        tones = drive_tones(1.0e9, mod, spur)  # offsets relative to f_a
        offsets, weights = [], []
        for f, w in tones:
            off = f - 1.0e9
            for m in (-1.0, 0.0, 1.0):
                offsets.append(off - m * nv.a_hf)
                weights.append(w)
        self.offsets = np.asarray(offsets)
        self.weights = np.asarray(weights)
        self.hwhm = nv.linewidth_fwhm / 2.0
        self.contrast = nv.contrast

    def rate(self, delta: np.ndarray) -> np.ndarray:
        """Relative fluorescence given f_a - f_res per sample."""
        dip = np.zeros_like(delta)
        for off, w in zip(self.offsets, self.weights):
            x = (delta + off) / self.hwhm
            dip += w / (1.0 + x * x)
        return np.clip(1.0 - self.contrast * dip, 0.0, 1.0)


class Simulator:
    """One closed-loop run; owns all streaming state."""

    def __init__(self, cfg: SimConfig, cal: ctl.CalibrationResult):
        self.cfg = cfg
        self.cal = cal
        self.lockin_cfg = cfg.effective_lockin()
        self.fs = self.lockin_cfg.sample_rate
        self.dec = self.lockin_cfg.decimation
        if abs(self.fs / cfg.mod.f_mod - round(self.fs / cfg.mod.f_mod)) > 1e-9:
            raise ValueError("sample rate must be an integer multiple of f_mod")
        self.filt = design_fir(self.lockin_cfg.filter_order,
                               self.lockin_cfg.cutoff, self.fs / self.dec)
        t_nom = ctl.cycle_time(cfg.budget)
        blocks = max(1, int(round(t_nom * self.fs / self.dec)))
        self.cycle_samples = blocks * self.dec
        span = self.filt.order * self.dec
        if self.cycle_samples < span:
            raise ValueError("cycle shorter than the filter span; "
                             "reduce filter_order or decimation")
        self.t_cycle = self.cycle_samples / self.fs
        self.n_lat = int(round(cfg.synth.hop_latency * self.fs))
        self.shape = _Lineshape(cfg.nv, cfg.mod, cfg.spur)
        self.detector = PhotoDetector(cfg.optics, self.fs, cfg.noise_asd, cfg.seed)
        self.lia = LockInDemodulator(self.lockin_cfg, self.filt)
        self.gamma_signed = cfg.nv.branch_sign * cfg.nv.gamma

    def _resonance(self, t: np.ndarray, b: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        dt = cfg.delta_t0 + cfg.delta_t_rate * t
        return cfg.nv.d_gs + cfg.nv.beta * dt + self.gamma_signed * b

    def run(self) -> RunResult:
        cfg = self.cfg
        cal = self.cal
        n_cycles = max(1, int(round(cfg.duration / self.t_cycle)))
        cs = self.cycle_samples
        arange_cs = np.arange(cs)

        # acquire lock at the initial field (bias-point acquisition)
        b0 = float(np.asarray(stimulus.b_at(0.0, cfg.waveform)))
        f_center0 = cal.f_res + self.gamma_signed * b0
        synth = replace(cfg.synth,
                        f_agile=f_center0 - cfg.synth.f_lo - cfg.synth.f_0,
                        pending_hop=None)
        state = ctl.LockState(f_center=f_center0, b_est=b0, locked=True, cycles=0)
        loss_limit = cal.gamma * cal.gamma_range / 2.0  # Hz, true-detuning bound

        records: List[TraceRecord] = []
        status = STATUS_OK
        for cyc in range(n_cycles):
            t = (cyc * cs + arange_cs) / self.fs
            b = np.asarray(stimulus.b_at(t, cfg.waveform), dtype=float)
            f_res = self._resonance(t, b)
            fa = np.full(cs, synth.f_agile)
            if synth.pending_hop is not None:
                target, t_eff = synth.pending_hop
                n_old = int(np.ceil(max(0.0, (t_eff - t[0])) * self.fs))
                fa[min(n_old, cs):] = target
                synth = apply_pending(synth, t[-1])
            sign = _drive_sign(cyc * cs, cs, int(round(self.fs / cfg.mod.f_mod)))
            f_a = synth.f_lo + synth.f_0 + fa + cfg.mod.f_dev * sign
            rate = self.shape.rate(f_a - f_res)
            codes, sat = self.detector.process(rate)
            volts = codes * cfg.optics.lsb
            x_out, _ = self.lia.process(volts)
            delta_v = float(x_out[-1])
            t_end = t[-1] + 1.0 / self.fs

            if state.locked:
                delta_f, delta_b, state = ctl.step(delta_v, cal, state)
                if state.locked:
                    detune = f_res[-1] - (state.f_center - delta_f)
                    if abs(detune) > loss_limit:
                        state = replace(state, locked=False,
                                        f_center=state.f_center - delta_f,
                                        b_est=state.b_est - delta_b)
                if state.locked:
                    try:
                        synth = request_hop(synth.f_agile + delta_f, t_end, synth)
                    except BandEdgeError:
                        status = STATUS_RANGE_EXHAUSTED
                        records.append(TraceRecord(
                            t_end, delta_v, state.f_center, state.b_est,
                            float(b[-1]), state.locked, bool(sat.any())))
                        break
            records.append(TraceRecord(t_end, delta_v, state.f_center,
                                       state.b_est, float(b[-1]),
                                       state.locked, bool(sat.any())))
        if status == STATUS_OK and records and not records[-1].locked:
            status = STATUS_LOCK_LOST
        return RunResult(records=records, status=status, cal=cal,
                         cycle_time=self.t_cycle)


def run(cfg: SimConfig, cal: Optional[ctl.CalibrationResult] = None) -> RunResult:
    """Run a closed-loop simulation; auto-calibrates when no result is given."""
    if cal is None:
        cal = auto_calibrate(cfg)
    return Simulator(cfg, cal).run()


def sweep(cfg: SimConfig, f_start: float, f_stop: float, points: int,
          dwell: Optional[float] = None) -> List[Tuple[float, float]]:
    """Open-loop ODMR sweep: steady-state delta_v at each center frequency.

    Frequencies are absolute MW center frequencies; each must map inside the
    synthesizer band.  Hop latency is honored and filter settling discarded.
    """
    if f_start >= f_stop:
        raise ValueError("f_start must be below f_stop")
    lockin_cfg = cfg.effective_lockin()
    fs = lockin_cfg.sample_rate
    dec = lockin_cfg.decimation
    filt = design_fir(lockin_cfg.filter_order, lockin_cfg.cutoff, fs / dec)
    span_time = (filt.order + 2) * dec / fs
    if dwell is None:
        dwell = 2.0 * span_time
    if dwell < span_time:
        raise ValueError("dwell shorter than the filter settle time")
    n_dwell = max(1, int(round(dwell * fs / dec))) * dec
    n_settle_out = filt.order + 1

    grid = np.linspace(f_start, f_stop, points)
    for f in (grid[0], grid[-1]):
        fa = f - cfg.synth.f_lo - cfg.synth.f_0
        if not cfg.synth.band[0] <= fa <= cfg.synth.band[1]:
            raise BandEdgeError(fa, cfg.synth.band)

    shape = _Lineshape(cfg.nv, cfg.mod, cfg.spur)
    detector = PhotoDetector(cfg.optics, fs, cfg.noise_asd, cfg.seed)
    lia = LockInDemodulator(lockin_cfg, filt)
    n_lat = int(round(cfg.synth.hop_latency * fs))
    b0 = float(np.asarray(stimulus.b_at(0.0, cfg.waveform)))
    f_res0 = cfg.nv.d_gs + cfg.nv.beta * cfg.delta_t0 \
        + cfg.nv.branch_sign * cfg.nv.gamma * b0

    out = []
    n0 = 0
    prev_f = grid[0]
    for f in grid:
        fc = np.full(n_dwell, f)
        fc[:min(n_lat, n_dwell)] = prev_f
        sign = _drive_sign(n0, n_dwell, int(round(fs / cfg.mod.f_mod)))
        f_a = fc + cfg.mod.f_dev * sign
        rate = shape.rate(f_a - f_res0)
        codes, _ = detector.process(rate)
        x_out, _ = lia.process(codes * cfg.optics.lsb)
        out.append((float(f), float(np.mean(x_out[n_settle_out:]))))
        n0 += n_dwell
        prev_f = f
    return out


def auto_calibrate(cfg: SimConfig) -> ctl.CalibrationResult:
    """Noiseless open-loop sweep about the zero-field resonance, then fit."""
    quiet = replace(cfg, noise_asd=0.0, waveform=stimulus.Dc(0.0))
    center = cfg.nv.d_gs + cfg.nv.beta * cfg.delta_t0
    half = cfg.sweep_span / 2.0
    data = sweep(quiet, center - half, center + half, cfg.sweep_points)
    return ctl.calibrate(data, cfg.fit_window, cfg.nv.gamma)
