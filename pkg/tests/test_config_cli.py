"""Config loading/merging/hashing and the command-line front end."""

import yaml
import numpy as np
import pytest

from nvlock import cli
from nvlock.config import (ConfigError, config_from_dict, config_hash,
                           load_calibration, load_config, load_dict, merge,
                           save_calibration)
from nvlock.controller import CalibrationResult
from nvlock.scenarios import SCENARIOS, scenario_overrides


class TestConfig:
    def test_presets_load(self):
        sfm = load_config("sfm")
        tfm = load_config("tfm")
        assert sfm.mode == "sfm" and tfm.mode == "tfm"
        assert sfm.mod.f_dev == pytest.approx(3e6)
        assert tfm.mod.f_dev == pytest.approx(0.5e6)
        assert sfm.lockin.sample_rate == pytest.approx(60e6)
        assert sfm.synth.f_center == pytest.approx(2.87e9)
        assert sfm.synth.f_band == pytest.approx(120e6)

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_dict("/no/such/file.yaml")

    def test_invalid_field_reported(self):
        raw = load_dict("sfm")
        raw["nv"]["contrast"] = 0.9
        with pytest.raises(ConfigError):
            config_from_dict(raw)

    def test_merge_is_deep(self):
        base = {"a": {"b": 1, "c": 2}, "d": 3}
        out = merge(base, {"a": {"c": 9}})
        assert out == {"a": {"b": 1, "c": 9}, "d": 3}
        assert base["a"]["c"] == 2  # base untouched

    def test_hash_stable_and_sensitive(self):
        raw1 = load_dict("sfm")
        raw2 = load_dict("sfm")
        assert config_hash(raw1) == config_hash(raw2)
        raw2["seed"] = 999
        assert config_hash(raw1) != config_hash(raw2)

    def test_exponent_strings_coerced(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("noise_asd: 5.0e-11\nduration: 1e-2\nseed: 7\n")
        raw = load_dict(p)
        assert raw["noise_asd"] == pytest.approx(5.0e-11)
        assert isinstance(raw["seed"], int)

    def test_calibration_round_trip(self, tmp_path):
        cal = CalibrationResult(k=0.34e-6, gamma_range=264e3, f_res=2.87e9)
        path = tmp_path / "cal.yaml"
        save_calibration(path, cal)
        assert load_calibration(path) == cal

    def test_scenarios_resolve(self):
        for name in SCENARIOS:
            base, overrides = scenario_overrides(name)
            cfg = load_config(base, dict(overrides, scale_factor=10.0))
            assert cfg.duration > 0
        with pytest.raises(KeyError):
            scenario_overrides("no-such-scenario")


def _cli(*argv):
    return cli.main(list(argv))


class TestCli:
    def test_track_scenario(self, tmp_path):
        out = tmp_path / "run"
        rc = _cli("track", "--scenario", "dc-step", "--scale-factor", "10",
                  "--out", str(out))
        assert rc == 0
        summary = yaml.safe_load((out / "summary.yaml").read_text())
        assert summary["status"] == "ok"
        assert summary["locked_fraction"] == 1.0
        assert summary["bandwidth_hz"] == pytest.approx(1e4, rel=0.05)
        assert (out / "trace.csv").exists()
        assert (out / "calibration.yaml").exists()

    def test_track_reuses_sidecar_and_is_deterministic(self, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        for out in (out1, out2):
            rc = _cli("track", "--scenario", "dc-step", "--scale-factor", "10",
                      "--out", str(out), "--seed", "3")
            assert rc == 0
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()
        # second run against the existing sidecar gives the same trace
        rc = _cli("track", "--scenario", "dc-step", "--scale-factor", "10",
                  "--out", str(out1), "--seed", "3")
        assert rc == 0
        assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()

    def test_sweep_outputs(self, tmp_path):
        out = tmp_path / "sweep"
        rc = _cli("sweep", "--config", "sfm", "--scale-factor", "10",
                  "--out", str(out))
        assert rc == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "f_hz,delta_v_volts"
        assert len(lines) == 1 + 241
        cal = load_calibration(out / "calibration.yaml")
        assert cal.k > 0

    def test_analyze_outputs(self, tmp_path):
        run_dir = tmp_path / "run"
        assert _cli("track", "--scenario", "dc-step", "--scale-factor", "10",
                    "--out", str(run_dir)) == 0
        out = tmp_path / "analysis"
        rc = _cli("analyze", "--trace", str(run_dir / "trace.csv"),
                  "--out", str(out))
        assert rc == 0
        report = yaml.safe_load((out / "analysis.yaml").read_text())
        assert report["locked_fraction"] == 1.0
        assert report["samples"] > 0

    def test_analyze_linearity(self, tmp_path):
        pts = tmp_path / "lin.csv"
        with open(pts, "w") as f:
            f.write("current_a,amplitude_nt\n")
            for i in range(5):
                f.write(f"{i * 1e-3},{i * 200.0}\n")
        run_dir = tmp_path / "run"
        assert _cli("track", "--scenario", "dc-step", "--scale-factor", "10",
                    "--out", str(run_dir)) == 0
        out = tmp_path / "a"
        rc = _cli("analyze", "--trace", str(run_dir / "trace.csv"),
                  "--linearity", str(pts), "--out", str(out))
        assert rc == 0
        report = yaml.safe_load((out / "analysis.yaml").read_text())
        assert report["nonlinearity_percent"] == pytest.approx(0.0, abs=1e-9)
        assert report["slope_nt_per_a"] == pytest.approx(2e5)

    def test_missing_config_exits_2(self, tmp_path):
        assert _cli("track", "--config", "/no/such.yaml",
                    "--out", str(tmp_path)) == 2

    def test_bad_trace_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("nope\n")
        assert _cli("analyze", "--trace", str(bad), "--out", str(tmp_path)) == 2

    def test_lock_loss_exits_1(self, tmp_path):
        cfgfile = tmp_path / "lost.yaml"
        raw = load_dict("sfm")
        raw = merge(raw, {"duration": 0.005, "noise_asd": 0.0,
                          "waveform": {"variant": "step", "level0": 0.0,
                                       "level1": 2.0e5, "t_step": 2e-3}})
        cfgfile.write_text(yaml.safe_dump(raw))
        rc = _cli("track", "--config", str(cfgfile), "--scale-factor", "10",
                  "--out", str(tmp_path / "out"))
        assert rc == 1

    def test_range_exhaustion_exits_3(self, tmp_path):
        cfgfile = tmp_path / "wide.yaml"
        raw = load_dict("sfm")
        raw = merge(raw, {"duration": 0.01, "noise_asd": 0.0,
                          "waveform": {"variant": "sine", "amplitude": 2.5e6,
                                       "frequency": 41.0}})
        cfgfile.write_text(yaml.safe_dump(raw))
        rc = _cli("track", "--config", str(cfgfile), "--scale-factor", "10",
                  "--out", str(tmp_path / "out"))
        assert rc == 3

    def test_usage_error(self):
        assert _cli("frobnicate") == 2
