"""Command-line front end: sweep | calibrate | track | analyze.

Exit codes: 0 success, 1 lock loss, 2 usage/config error, 3 band exhaustion.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import engine, metrics
from .config import (ConfigError, config_from_dict, config_hash, load_dict,
                     load_calibration, merge, save_calibration)
from .controller import cycle_time
from .mw import BandEdgeError
from .scenarios import scenario_overrides

EXIT_OK = 0
EXIT_LOCK_LOST = 1
EXIT_USAGE = 2
EXIT_RANGE = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _build_config(args):
    """Resolve scenario/base/flag precedence into (SimConfig, raw dict)."""
    overrides = {}
    source = args.config
    if args.scenario:
        base, scn = scenario_overrides(args.scenario)
        source = args.config or base
        overrides = scn
    if source is None:
        source = "sfm"
    raw = load_dict(source)
    raw = merge(raw, overrides)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.scale_factor is not None:
        raw["scale_factor"] = args.scale_factor
    return config_from_dict(raw), raw


def _write_sweep_csv(path, data):
    with open(path, "w", newline="\n") as f:
        f.write("f_hz,delta_v_volts\n")
        for freq, v in data:
            f.write(f"{_fmt(freq)},{_fmt(v)}\n")


def cmd_sweep(args) -> int:
    cfg, raw = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    center = cfg.nv.d_gs + cfg.nv.beta * cfg.delta_t0
    half = cfg.sweep_span / 2.0
    data = engine.sweep(cfg, center - half, center + half, cfg.sweep_points)
    _write_sweep_csv(out / "sweep.csv", data)
    cal = engine.auto_calibrate(cfg)
    save_calibration(out / "calibration.yaml", cal)
    print(f"sweep: {len(data)} points -> {out / 'sweep.csv'}")
    print(f"calibration: k={cal.k:.4g} V/Hz, range={cal.gamma_range:.4g} nT, "
          f"f_res={cal.f_res:.10g} Hz")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg, raw = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cal = engine.auto_calibrate(cfg)
    save_calibration(out / "calibration.yaml", cal)
    print(f"calibration: k={cal.k:.4g} V/Hz, range={cal.gamma_range:.4g} nT, "
          f"f_res={cal.f_res:.10g} Hz -> {out / 'calibration.yaml'}")
    return EXIT_OK


def cmd_track(args) -> int:
    cfg, raw = _build_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cal_path = out / "calibration.yaml"
    if args.auto_calibrate or not cal_path.exists():
        if not args.auto_calibrate and not cal_path.exists():
            print(f"no calibration sidecar at {cal_path}; auto-calibrating",
                  file=sys.stderr)
        cal = engine.auto_calibrate(cfg)
        save_calibration(cal_path, cal)
    else:
        cal = load_calibration(cal_path)
    result = engine.run(cfg, cal)
    result.to_csv(out / "trace.csv")

    locked = result.locked
    summary = {
        "status": result.status,
        "cycles": len(result.records),
        "cycle_time_s": float(result.cycle_time),
        "bandwidth_hz": float(1.0 / result.cycle_time),
        "locked_fraction": float(locked.mean()),
        "config_hash": config_hash(raw),
        "k_volts_per_hz": float(cal.k),
        "gamma_range_nt": float(cal.gamma_range),
    }
    n_locked = int(locked.sum())
    if n_locked >= 4:
        t = result.t[locked]
        b = result.b_est[locked]
        summary["tracking_rate_max_ts"] = metrics.max_tracking_rate(t, b, 4)
        summary["trace_std_nt"] = metrics.trace_std(b, result.b_true[locked])
        summary["f_center_excursion_hz"] = float(np.ptp(result.f_center[locked]))
        if n_locked >= 64:
            rate = 1.0 / result.cycle_time
            seg = min(1024, n_locked // 2)
            asd = metrics.asd_welch(b, rate, segment_len=seg)
            summary["dominant_frequency_hz"] = asd.dominant_frequency()
    with open(out / "summary.yaml", "w") as f:
        yaml.safe_dump(summary, f, sort_keys=True)
    print(yaml.safe_dump(summary, sort_keys=True).strip())
    if result.status == engine.STATUS_RANGE_EXHAUSTED:
        return EXIT_RANGE
    if result.status == engine.STATUS_LOCK_LOST:
        return EXIT_LOCK_LOST
    return EXIT_OK


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = engine.read_trace(args.trace)
    t = trace["t_s"]
    b = trace["b_est_nt"]
    if t.size < 3:
        raise ConfigError("trace too short to analyze")
    rate = 1.0 / float(np.median(np.diff(t)))
    report = {
        "samples": int(t.size),
        "rate_hz": rate,
        "trace_std_nt": metrics.trace_std(b, trace["b_true_nt"]),
        "locked_fraction": float(trace["locked"].mean()),
    }
    seg = min(1024, t.size // 2)
    if seg >= 16:
        asd = metrics.asd_welch(b, rate, segment_len=seg)
        with open(out / "asd.csv", "w", newline="\n") as f:
            f.write("f_hz,asd_nt_rthz\n")
            for freq, a in zip(asd.frequencies, asd.asd):
                f.write(f"{_fmt(freq)},{_fmt(a)}\n")
        report["noise_floor_nt_rthz"] = float(asd.floor)
        report["dominant_frequency_hz"] = asd.dominant_frequency()
    if args.linearity:
        pts = np.loadtxt(args.linearity, delimiter=",", skiprows=1, ndmin=2)
        lin = metrics.nonlinearity(pts)
        report["nonlinearity_percent"] = lin.nonlinearity_percent
        report["slope_nt_per_a"] = lin.slope
    with open(out / "analysis.yaml", "w") as f:
        yaml.safe_dump(report, f, sort_keys=True)
    print(yaml.safe_dump(report, sort_keys=True).strip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nvlock",
        description="Closed-loop frequency-locked NV magnetometer simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="config path or preset name (sfm, tfm)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--scenario", default=None,
                        help="named scenario applied over the base config")
        sp.add_argument("--scale-factor", type=float, default=None,
                        help="uniform time-scale reduction for fast runs")

    sp = sub.add_parser("sweep", help="open-loop ODMR sweep + calibration sidecar")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("calibrate", help="write the calibration sidecar only")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("track", help="closed-loop run: trace CSV + summary")
    common(sp)
    sp.add_argument("--auto-calibrate", action="store_true",
                    help="recalibrate instead of reading the sidecar")
    sp.set_defaults(func=cmd_track)

    sp = sub.add_parser("analyze", help="offline metrics for a trace CSV")
    sp.add_argument("--trace", required=True, help="trace CSV path")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--linearity", default=None,
                    help="CSV of (current_a, amplitude_nt) for a linearity fit")
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except BandEdgeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RANGE
    except (ConfigError, KeyError, ValueError, OSError,
            engine.TraceSchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
