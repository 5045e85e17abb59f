"""Discrete-time simulator and DSP library for a closed-loop
frequency-locked NV-diamond magnetometer."""

from .controller import (CalibrationResult, LockState, TimingBudget, calibrate,
                         cycle_time, dynamic_range, step, v_bmax)
from .engine import RunResult, SimConfig, Simulator, TraceRecord, auto_calibrate, run, sweep
from .lockin import (DemodSample, FirFilter, LockInConfig, LockInDemodulator,
                     demodulate, design_fir, phase_calibrate, step_metrics)
from .metrics import (AsdResult, LinearityResult, asd_welch, max_tracking_rate,
                      nonlinearity, trace_std, tracking_rate)
from .mw import (BandEdgeError, ModulationConfig, SpurModel, SynthState,
                 drive_tones, instantaneous_frequency, request_hop)
from .nv import (FieldState, NvParams, OpticalChain, PhotoDetector,
                 fluorescence_rate, photocurrent_stream, resonance_frequency)

__version__ = "0.1.0"
