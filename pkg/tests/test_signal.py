import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal as sps

from gazekit.signal import (FilterConfig, angular_between, az_el_velocity,
                            bilateral_filter, design_kaiser_lowpass,
                            direction_series, kaiser_zero_phase_lowpass,
                            make_velocity_trace, two_point_velocity)


def _great_circle(rate_hz, speed_dps, n, axis=(0, 1, 0)):
    from gazekit.geometry import quat_apply, quat_from_axis_angle
    t = np.arange(n) / rate_hz
    angles = np.deg2rad(speed_dps) * t
    q = quat_from_axis_angle(axis, angles)
    return quat_apply(q, np.array([0.0, 0.0, 1.0]))


def test_two_point_velocity_exact_on_constant_rotation():
    dirs = _great_circle(300.0, 100.0, 900)
    v = two_point_velocity(dirs, 300.0)
    interior = v[1:-1]
    assert np.max(np.abs(interior - 100.0) / 100.0) < 1e-6


def test_two_point_velocity_endpoint_policy():
    dirs = _great_circle(300.0, 40.0, 10)
    v = two_point_velocity(dirs, 300.0)
    assert v[0] == v[1] and v[-1] == v[-2]


def test_angular_between_stability():
    a = np.array([0.0, 0.0, 1.0])
    assert angular_between(a, a) == 0.0
    assert angular_between(a, -a) == pytest.approx(180.0)
    tiny = np.array([1e-8, 0.0, 1.0])
    tiny = tiny / np.linalg.norm(tiny)
    assert angular_between(a, tiny) == pytest.approx(np.degrees(1e-8), rel=1e-6)


def test_az_el_small_angle_error_bound():
    # worst case: the whole displacement between v_{n-1} and v_{n+1} is 14 deg
    # of azimuth; the sine-based estimate must stay within 1%
    for disp in (5.0, 10.0, 14.0):
        rate = 2.0  # 1 s between the two flanking samples -> disp deg per 2 samples
        dirs = _great_circle(rate, disp, 5)
        az, _ = az_el_velocity(dirs, rate)
        true = disp  # deg/s by construction
        rel = abs(abs(az[2]) - true) / true
        expected = abs(np.deg2rad(disp) - np.sin(np.deg2rad(disp))) / np.deg2rad(disp)
        assert rel == pytest.approx(expected, abs=1e-4)
        assert (rel <= 0.01) == (disp <= 14.0 + 1e-9)


def test_az_el_sign_conventions():
    rate = 100.0
    # rotation of forward toward +x: positive azimuth
    dirs = _great_circle(rate, 30.0, 20, axis=(0, 1, 0))
    az, el = az_el_velocity(dirs, rate)
    assert np.all(az[1:-1] > 0)
    assert np.allclose(el[1:-1], 0.0, atol=1e-9)
    # upward rotation: positive elevation
    dirs = _great_circle(rate, 30.0, 20, axis=(-1, 0, 0))
    az, el = az_el_velocity(dirs, rate)
    assert np.all(el[1:-1] > 0)


def test_kaiser_zero_phase_is_time_reversal_symmetric(rng):
    x = rng.normal(size=2048)
    y = kaiser_zero_phase_lowpass(x, 300.0)
    y_rev = kaiser_zero_phase_lowpass(x[::-1], 300.0)[::-1]
    assert np.allclose(y, y_rev, atol=1e-10)


def test_kaiser_dc_gain_and_stopband():
    taps = design_kaiser_lowpass(300.0, FilterConfig())
    w, h = sps.freqz(taps, worN=4096, fs=300.0)
    dc = np.abs(h[0])
    assert abs(dc - 1.0) < 1e-9
    # effective zero-phase response is |H|^2: demand >= 40 dB at 100 Hz
    h100 = np.abs(h[np.argmin(np.abs(w - 100.0))]) ** 2
    assert -20 * np.log10(h100) >= 40.0


def test_kaiser_rejects_short_series():
    with pytest.raises(ValueError):
        kaiser_zero_phase_lowpass(np.zeros(50), 300.0)


def _saccade_profile(rate=300.0, peak=400.0, dur_s=0.05, n=600):
    t = np.arange(n) / rate
    v = np.zeros(n)
    m = int(dur_s * rate)
    s = n // 2 - m // 2
    v[s:s + m] = peak * 0.5 * (1 - np.cos(2 * np.pi * np.arange(m) / m))
    return t, v


def test_bilateral_preserves_peak_gaussian_does_not(rng):
    t, v = _saccade_profile()
    noisy = v + rng.normal(0, 1.0, v.size)
    cfg = FilterConfig()
    out = bilateral_filter(noisy, t, cfg)
    peak_in = noisy.max()
    assert abs(out.max() - peak_in) / peak_in < 0.02
    # time-domain Gaussian with the same sigma suppresses the peak by > 5%
    sigma_samples = cfg.bilateral_sigma_t_s * 300.0
    width = int(cfg.bilateral_window_s * 300.0) | 1
    kernel = np.exp(-0.5 * ((np.arange(width) - width // 2) / sigma_samples) ** 2)
    kernel /= kernel.sum()
    gauss = np.convolve(noisy, kernel, mode="same")
    assert (peak_in - gauss.max()) / peak_in > 0.05


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_bilateral_output_is_convex_combination(seed):
    rng = np.random.default_rng(seed)
    n = 120
    t = np.arange(n) / 300.0
    x = rng.normal(0, 50, n)
    out = bilateral_filter(x, t, FilterConfig())
    # each output lies within the min/max of its own window
    half = FilterConfig().bilateral_window_s / 2
    for i in range(n):
        sl = (t >= t[i] - half) & (t <= t[i] + half)
        assert x[sl].min() - 1e-9 <= out[i] <= x[sl].max() + 1e-9


def test_trace_recovers_configured_kinematics():
    from gazekit.synth import ScenarioConfig, generate
    # long saccades keep the velocity bell's spectrum below the 58 Hz cutoff
    cfg = ScenarioConfig(duration_s=10.0, rng_seed=5, tremor_dps=0.0,
                         saccade_peak_dps=(400.0, 400.0),
                         saccade_duration_s=(0.060, 0.080))
    rec, labels = generate(cfg)
    trace = make_velocity_trace(rec)
    from gazekit.core import events_from_labels
    peaks = []
    for ev in events_from_labels(labels.labels):
        if ev.cls == 4 and ev.n_samples >= 8:
            peaks.append(trace.eye_abs[ev.start_idx:ev.end_idx].max())
    assert peaks, "scenario produced no scorable saccades"
    # configured 400 deg/s peaks recovered within 5%
    assert np.median(np.abs(np.asarray(peaks) - 400.0) / 400.0) < 0.05


def test_trace_masks_low_confidence():
    from gazekit.synth import ScenarioConfig, generate
    rec, _ = generate(ScenarioConfig(duration_s=5.0, rng_seed=2,
                                     blink_proportion=0.15))
    trace = make_velocity_trace(rec)
    assert not trace.valid[rec.confidence < 0.3].any()
    assert trace.valid[rec.confidence >= 0.3].all()
    eye, head = direction_series(rec)
    assert np.allclose(np.linalg.norm(eye, axis=1), 1.0, atol=1e-9)
    assert np.allclose(np.linalg.norm(head, axis=1), 1.0, atol=1e-9)
