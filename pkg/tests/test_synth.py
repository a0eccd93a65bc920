import numpy as np
import pytest

from sparsehr.pipeline import RunConfig, estimate, passband_peak, periodogram_spectra, joint_spectra
from sparsehr.preprocess import make_windows
from sparsehr.spectrum import build_dictionary, periodogram
from sparsehr.synth import (
    MATone,
    NEAR_COLLISION_HR_BIN,
    SynthSpec,
    generate,
    heart_component,
    near_collision_spec,
    piecewise_linear,
    treadmill_spec,
    truth_trace,
)


def test_constant_rate_truth_is_exact():
    rec, truth = generate(SynthSpec(duration_s=30, hr_trace_bpm=150.0))
    assert len(truth) == 12
    np.testing.assert_array_equal(truth.bpm_true, 150.0)
    assert len(rec) == 30 * 125


def test_ramp_truth_is_window_mean():
    spec = SynthSpec(duration_s=20, hr_trace_bpm=((0, 100), (20, 140)))
    t = np.arange(1000) / 125
    assert truth_trace(spec)[0] == pytest.approx(np.mean(100 + 2 * t))


def test_piecewise_linear_holds_outside_knots():
    np.testing.assert_allclose(piecewise_linear(((1, 10), (3, 30)), [0, 2, 5]), [10, 20, 30])
    np.testing.assert_allclose(piecewise_linear(7.0, [0, 100]), [7, 7])


def test_deterministic_per_seed():
    spec = treadmill_spec(seed=3, duration_s=40)
    a, _ = generate(spec)
    b, _ = generate(spec)
    c, _ = generate(treadmill_spec(seed=4, duration_s=40))
    np.testing.assert_array_equal(a.channels(), b.channels())
    assert not np.array_equal(a.channels(), c.channels())


def test_short_recording_has_no_truth():
    _, truth = generate(SynthSpec(duration_s=5))
    assert truth is None


@pytest.mark.parametrize("bad", [
    dict(hr_trace_bpm=30.0),
    dict(hr_trace_bpm=((0, 100), (10, 230))),
    dict(noise_sigma=-1.0),
    dict(ma_tones=(MATone(freq_hz=80.0),)),
    dict(ma_tones=(MATone(freq_hz=1.0, amplitude=-1.0),)),
])
def test_validation(bad):
    with pytest.raises(ValueError):
        generate(SynthSpec(duration_s=10, **bad))


@pytest.mark.parametrize("bpm", [60.0, 90.0, 150.0, 187.5])
def test_heart_energy_concentrated(bpm):
    """Window energy sits in the heart-rate bin when the rate is on the M-point grid."""
    fs, window = 125.0, 8.0
    M = int(fs * window)
    spec = SynthSpec(duration_s=window, fs=fs, hr_trace_bpm=bpm, hr_harmonics=((1, 1.0),))
    rec, _ = generate(spec)
    P = periodogram(rec.ppg - rec.ppg.mean(), M)[: M // 2]
    k = int(round(bpm / 60 * M / fs))
    assert P[k - 1:k + 2].sum() / P.sum() > 0.95


def test_accel_free_of_heart_rate():
    spec = SynthSpec(duration_s=60, hr_trace_bpm=((0, 90), (60, 150)), seed=1,
                     ma_tones=(MATone(freq_hz=1.3, amplitude=1.0),), noise_sigma=0.05)
    rec, _ = generate(spec)
    hr = heart_component(spec)
    for axis in (rec.accel_x, rec.accel_y, rec.accel_z):
        assert abs(np.corrcoef(hr, axis)[0, 1]) < 0.05


def test_ma_only_in_ppg_when_absent_from_accel():
    spec = SynthSpec(duration_s=10, ma_tones=(MATone(freq_hz=2.0, present_in_accel=False),))
    rec, _ = generate(spec)
    assert np.all(rec.accel_x == 0) and np.any(rec.ppg != 0)


def test_near_collision_joint_beats_periodogram():
    """MMV keeps the heart-rate bin where two stronger MA tones blur the periodogram."""
    rec, _ = generate(near_collision_spec())
    cfg = RunConfig()
    windows = make_windows(rec, cfg.pipeline)[1:]
    mmv, _ = joint_spectra(windows, build_dictionary(200, cfg.n_grid), cfg.solver)
    per = periodogram_spectra(windows, cfg.n_grid)
    mmv_peaks = [passband_peak(s, cfg) for s in mmv]
    per_peaks = [passband_peak(s, cfg) for s in per]
    assert all(abs(k - NEAR_COLLISION_HR_BIN) <= 1 for k in mmv_peaks)
    assert all(abs(k - NEAR_COLLISION_HR_BIN) > 1 for k in per_peaks)
