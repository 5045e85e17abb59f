"""Named run scenarios: each maps to a base preset plus config overrides."""

from __future__ import annotations

SCENARIOS = {
    # 41 Hz sine spanning 3.8 mT peak-to-peak: exercises frequency re-centering
    # across most of the 120 MHz hop band (106.4 MHz excursion), noiseless.
    "extended-range": {
        "base": "sfm",
        "overrides": {
            "duration": 0.0732,  # three periods
            "noise_asd": 0.0,
            "waveform": {"variant": "sine", "amplitude": 1.9e6,
                         "frequency": 41.0, "phase": 0.0, "offset": 0.0},
        },
    },
    # 325 Hz, 360 uT sine: peak slew 0.735 T/s, just inside the single-tone
    # tracking limit of 1.32 T/s per cycle step.
    "sfm-sine-extreme": {
        "base": "sfm",
        "overrides": {
            "duration": 0.02,
            "waveform": {"variant": "sine", "amplitude": 3.6e5,
                         "frequency": 325.0, "phase": 0.0, "offset": 0.0},
        },
    },
    # same sine at twice the amplitude: the per-cycle field change exceeds
    # half the intrinsic range and the loop must drop lock.
    "sfm-sine-extreme-2x": {
        "base": "sfm",
        "overrides": {
            "duration": 0.01,
            "waveform": {"variant": "sine", "amplitude": 7.2e5,
                         "frequency": 325.0, "phase": 0.0, "offset": 0.0},
        },
    },
    # 75 Hz square wave through the coil time constant: ramp-limited edges.
    "sfm-square": {
        "base": "sfm",
        "overrides": {
            "duration": 0.04,
            "waveform": {"variant": "square", "amplitude": 3.9e5,
                         "frequency": 75.0, "coil_tau": 0.95e-3, "offset": 0.0},
        },
    },
    "tfm-square": {
        "base": "tfm",
        "overrides": {
            "duration": 0.04,
            "waveform": {"variant": "square", "amplitude": 4.6e4,
                         "frequency": 75.0, "coil_tau": 0.85e-3, "offset": 0.0},
        },
    },
    # mains pickup: 50 Hz plus harmonics, measured at a reduced loop bandwidth
    # (larger decimation stretches the demod window to ~0.8 ms).
    "mains": {
        "base": "tfm",
        "overrides": {
            "duration": 1.0,
            "waveform": {"variant": "harmonics", "fundamental": 50.0,
                         "amplitudes": [5.0e3, 1.2e3, 0.5e3]},
            "lockin": {"decimation": 480},
            "budget": {"demod_time": 800.0e-6},
        },
    },
    # quiescent field with the calibrated noise preset: sensitivity floor runs.
    "quiet": {
        "base": "sfm",
        "overrides": {
            "duration": 0.4,
            "waveform": {"variant": "dc", "level": 0.0},
        },
    },
    # quarter-intrinsic-range DC step, noiseless: settles within a few cycles.
    "dc-step": {
        "base": "sfm",
        "overrides": {
            "duration": 0.01,
            "noise_asd": 0.0,
            "waveform": {"variant": "step", "level0": 0.0, "level1": 6.6e4,
                         "t_step": 2.0e-3},
        },
    },
}


def scenario_overrides(name: str):
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; "
                       f"choose from {sorted(SCENARIOS)}")
    entry = SCENARIOS[name]
    return entry["base"], entry["overrides"]
