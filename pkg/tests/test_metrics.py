import warnings

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sparsehr.metrics import (
    DegenerateStatisticWarning,
    bland_altman,
    evaluate,
    linear_fit,
    pearson,
    pooled_summary,
)

bpm_arrays = st.integers(2, 40).flatmap(
    lambda n: st.tuples(
        arrays(float, n, elements=st.floats(40, 220)),
        arrays(float, n, elements=st.floats(40, 220)),
    )
)


def test_perfect_estimates():
    truth = np.array([90.0, 100.0, 120.0, 140.0])
    r = evaluate(truth, truth)
    assert r.error1_bpm == 0 and r.error2_fraction == 0
    assert r.loa == (0.0, 0.0)
    assert r.pearson_r == pytest.approx(1.0)
    assert r.fit_slope == pytest.approx(1.0) and r.fit_intercept == pytest.approx(0.0, abs=1e-9)


def test_worked_example():
    r = evaluate([100.0, 102.0], [101.0, 100.0])
    assert r.error1_bpm == pytest.approx(1.5)
    assert r.error2_fraction == pytest.approx((1 / 101 + 2 / 100) / 2)
    assert r.error2_fraction == pytest.approx(0.014950, abs=1e-6)


def test_constant_offset_collapses_limits():
    truth = np.array([80.0, 95.0, 130.0])
    _, loa, mu, sigma = bland_altman(truth + 2, truth)
    assert mu == pytest.approx(2) and sigma == pytest.approx(0, abs=1e-12)
    assert loa == pytest.approx((2, 2))


def test_limits_use_population_sd_by_default():
    est, truth = np.array([1.0, 2.0, 4.0, 9.0]), np.zeros(4)
    _, loa, mu, sigma = bland_altman(est, truth)
    assert sigma == pytest.approx(np.std(est))
    assert loa == pytest.approx((mu - 1.96 * sigma, mu + 1.96 * sigma))
    _, _, _, s1 = bland_altman(est, truth, ddof=1)
    assert s1 == pytest.approx(np.std(est, ddof=1))


@pytest.mark.filterwarnings("ignore::sparsehr.metrics.DegenerateStatisticWarning")
@settings(max_examples=200, deadline=None)
@given(bpm_arrays, st.randoms(use_true_random=False))
def test_permutation_invariance(pair, rnd):
    est, truth = pair
    idx = list(range(est.size))
    rnd.shuffle(idx)
    a, b = evaluate(est, truth), evaluate(est[idx], truth[idx])
    assert a.error1_bpm == pytest.approx(b.error1_bpm)
    assert a.error2_fraction == pytest.approx(b.error2_fraction)
    assert a.loa == pytest.approx(b.loa)


@pytest.mark.filterwarnings("ignore::sparsehr.metrics.DegenerateStatisticWarning")
@settings(max_examples=200, deadline=None)
@given(bpm_arrays, st.floats(-30, 30))
def test_translation(pair, c):
    est, truth = pair
    _, (lo, hi), mu, _ = bland_altman(est, truth)
    _, (lo2, hi2), mu2, _ = bland_altman(est + c, truth)
    assert mu2 == pytest.approx(mu + c, abs=1e-9)
    assert lo2 == pytest.approx(lo + c, abs=1e-9) and hi2 == pytest.approx(hi + c, abs=1e-9)
    e1 = evaluate(est, truth).error1_bpm
    assert abs(evaluate(est + c, truth).error1_bpm - e1) <= abs(c) + 1e-9


@settings(max_examples=200, deadline=None)
@given(bpm_arrays)
def test_pearson_matches_scipy(pair):
    x, y = pair
    if np.ptp(x) < 1e-6 or np.ptp(y) < 1e-6:
        return
    assert pearson(x, y) == pytest.approx(scipy.stats.pearsonr(x, y)[0], abs=1e-9)
    fit = scipy.stats.linregress(x, y)
    slope, intercept = linear_fit(x, y)
    assert slope == pytest.approx(fit.slope, rel=1e-7, abs=1e-9)
    assert intercept == pytest.approx(fit.intercept, rel=1e-7, abs=1e-6)


def test_r_squared_is_r_squared():
    r = evaluate([100.0, 110.0, 118.0, 135.0], [101.0, 108.0, 121.0, 133.0])
    assert r.r_squared == pytest.approx(r.pearson_r ** 2)


def test_constant_reference_warns_and_gives_nan():
    with pytest.warns(DegenerateStatisticWarning):
        r = evaluate([100.0, 101.0, 99.0], [100.0, 100.0, 100.0])
    assert np.isnan(r.pearson_r) and np.isnan(r.fit_slope) and np.isnan(r.r_squared)
    assert r.error1_bpm == pytest.approx(2 / 3)


def test_input_errors():
    with pytest.raises(ValueError):
        evaluate([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        evaluate([1.0], [1.0])


def test_pooled_summary():
    a = (np.array([100.0, 104.0, 110.0]), np.array([101.0, 103.0, 112.0]))
    b = (np.array([70.0, 75.0]), np.array([70.0, 80.0]))
    reports = {"a": evaluate(*a), "b": evaluate(*b)}
    out = pooled_summary(reports, [a[0], b[0]], [a[1], b[1]])
    assert out["pooled"].window_count == 5
    assert out["pooled"].error1_bpm == pytest.approx((1 + 1 + 2 + 0 + 5) / 5)
    assert out["dataset_mean_error1_bpm"] == pytest.approx((4 / 3 + 2.5) / 2)
    assert out["dataset_sd_error1_bpm"] == pytest.approx(np.std([4 / 3, 2.5]))


def test_report_json_round_trip():
    import json
    r = evaluate([100.0, 102.0, 99.0], [101.0, 100.0, 98.0])
    d = json.loads(r.to_json(dataset_id="x"))
    assert d["dataset_id"] == "x" and d["window_count"] == 3
    assert d["abs_errors"] == pytest.approx([1, 2, 1])
