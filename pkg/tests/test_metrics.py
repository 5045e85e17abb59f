"""Spectral density, tracking-rate, linearity and residual-std estimators."""

import numpy as np
import pytest

from nvlock.metrics import (asd_welch, max_tracking_rate, nonlinearity,
                            sine_amplitude, trace_std, tracking_rate)


class TestAsdWelch:
    def test_white_noise_floor(self):
        rng = np.random.default_rng(7)
        fs, sigma = 10e3, 3.0
        x = sigma * rng.standard_normal(200_000)
        res = asd_welch(x, fs)
        assert res.floor == pytest.approx(sigma * np.sqrt(2.0 / fs), rel=0.10)

    def test_parseval(self):
        rng = np.random.default_rng(1)
        fs = 10e3
        x = rng.standard_normal(400_000)
        res = asd_welch(x, fs, segment_len=4096)
        df = res.frequencies[1] - res.frequencies[0]
        power = np.sum(res.asd ** 2) * df
        assert power == pytest.approx(np.var(x), rel=0.05)

    def test_tone_detection(self):
        fs = 10e3
        t = np.arange(100_000) / fs
        rng = np.random.default_rng(2)
        x = 5.0 * np.sin(2 * np.pi * 50.0 * t) + 0.1 * rng.standard_normal(t.size)
        res = asd_welch(x, fs, segment_len=4096)
        assert res.dominant_frequency() == pytest.approx(50.0, abs=fs / 4096 + 0.1)

    def test_mains_guard_excluded_from_floor(self):
        fs = 10e3
        t = np.arange(200_000) / fs
        rng = np.random.default_rng(3)
        sigma = 1.0
        clean = sigma * rng.standard_normal(t.size)
        tone = 50.0 * np.sin(2 * np.pi * 50.0 * t)
        # 2 Hz bins put the tone on a bin center; Hann leakage stays inside
        # the +/-2 Hz guard, so the floor barely moves despite the huge line
        f_clean = asd_welch(clean, fs, segment_len=5000).floor
        f_tone = asd_welch(clean + tone, fs, segment_len=5000).floor
        assert f_tone == pytest.approx(f_clean, rel=0.15)

    def test_errors(self):
        with pytest.raises(ValueError):
            asd_welch(np.zeros(100), 1e3, segment_len=1024)
        with pytest.raises(ValueError):
            asd_welch(np.zeros(10_000), 1e3, overlap=1.5)


class TestTrackingRate:
    def test_exact_ramp(self):
        t = np.linspace(0, 1.0, 1001)
        b = 0.712e9 * t  # nT ramp -> 0.712 T/s
        assert tracking_rate(t, b) == pytest.approx(0.712)

    def test_window_selects_segment(self):
        t = np.linspace(0, 1.0, 1001)
        b = np.where(t < 0.5, 0.0, (t - 0.5) * 1e9)
        assert tracking_rate(t, b, window=(0.6, 0.9)) == pytest.approx(1.0)
        assert tracking_rate(t, b, window=(0.0, 0.4)) == pytest.approx(0.0, abs=1e-9)

    def test_short_window_rejected(self):
        t = np.linspace(0, 1.0, 1001)
        with pytest.raises(ValueError):
            tracking_rate(t, t, window=(0.5, 0.5005))

    def test_max_rate_on_triangle(self):
        t = np.linspace(0, 1.0, 2001)
        b = np.abs(t - 0.5) * 2e9  # |slope| = 2 T/s everywhere
        assert max_tracking_rate(t, b, 4) == pytest.approx(2.0, rel=1e-6)

    def test_max_rate_on_quadratic(self):
        # sliding linear fit reads the derivative at the window center
        t = np.linspace(0, 1.0, 2001)
        c = 3e9
        b = c * t ** 2
        w = 4
        t_mid = t[-w:].mean()
        assert max_tracking_rate(t, b, w) == pytest.approx(2 * c * t_mid * 1e-9,
                                                           rel=1e-6)

    def test_max_rate_window_validation(self):
        with pytest.raises(ValueError):
            max_tracking_rate(np.arange(10.0), np.arange(10.0), 2)


class TestNonlinearity:
    def test_exact_line_is_zero(self):
        pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]
        res = nonlinearity(pts)
        assert res.nonlinearity_percent == pytest.approx(0.0, abs=1e-10)
        assert res.slope == pytest.approx(2.0)
        assert res.intercept == pytest.approx(1.0)

    def test_known_residual(self):
        # y = x with the middle point lifted by d: closed-form least squares
        # gives residuals (-d/3, 2d/3, -d/3) and a fitted span of 2
        d = 0.06
        res = nonlinearity([(0.0, 0.0), (1.0, 1.0 + d), (2.0, 2.0)])
        assert res.slope == pytest.approx(1.0)
        assert res.intercept == pytest.approx(d / 3.0)
        assert res.nonlinearity_percent == pytest.approx(100.0 * (2 * d / 3) / 2.0)

    def test_rank_deficient(self):
        with pytest.raises(ValueError):
            nonlinearity([(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)])

    def test_too_few(self):
        with pytest.raises(ValueError):
            nonlinearity([(0.0, 0.0), (1.0, 1.0)])


class TestTraceStd:
    def test_known_difference(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([1.0, 1.0, 1.0, 1.0])
        assert trace_std(a, b) == pytest.approx(np.std([0.0, 1.0, 2.0, 3.0]))

    def test_identical_traces(self):
        x = np.linspace(0, 1, 50)
        assert trace_std(x, x) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            trace_std(np.zeros(3), np.zeros(4))


class TestSineAmplitude:
    def test_exact_recovery(self):
        t = np.linspace(0, 1.0, 5000)
        b = 2.0 + 7.5 * np.sin(2 * np.pi * 10.0 * t + 0.8)
        assert sine_amplitude(t, b, 10.0) == pytest.approx(7.5, rel=1e-9)

    def test_rejects_other_frequencies(self):
        t = np.linspace(0, 1.0, 5000)
        b = 4.0 * np.sin(2 * np.pi * 25.0 * t)
        assert sine_amplitude(t, b, 10.0) == pytest.approx(0.0, abs=1e-6)
