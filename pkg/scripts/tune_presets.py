#!/usr/bin/env python3
"""Preset calibration helper.

Measures, at the full sample rate, the closed-loop sensitivity floor produced
by each preset's photodetector noise ASD, and prints the rescaled noise_asd
that lands the floor on the target (floor is proportional to the injected
noise, so one run per preset suffices).  Also reports the calibrated slope k
and intrinsic range so lineshape edits can be sanity-checked.

Targets: sfm 10.5 nT/rtHz, tfm 4.2 nT/rtHz over the 10-1000 Hz band.
"""

import numpy as np

from nvlock import engine, metrics
from nvlock.config import load_config

TARGETS = {"sfm": 10.5, "tfm": 4.2}


def main():
    for name, target in TARGETS.items():
        cfg = load_config(name, {"duration": 0.4, "seed": 7})
        cal = engine.auto_calibrate(cfg)
        res = engine.run(cfg, cal)
        rate = 1.0 / res.cycle_time
        asd = metrics.asd_welch(res.b_est, rate, segment_len=1024)
        scale = target / asd.floor
        print(f"{name}: k = {cal.k * 1e6:.4f} uV/Hz, "
              f"range = {cal.gamma_range / 1e3:.1f} uT")
        print(f"  noise_asd = {cfg.noise_asd:.3e} A/rtHz "
              f"-> floor = {asd.floor:.3f} nT/rtHz (target {target})")
        print(f"  calibrated noise_asd = {cfg.noise_asd * scale:.3e} A/rtHz")


if __name__ == "__main__":
    main()
