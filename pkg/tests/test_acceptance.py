"""Acceptance criteria, one test each; a summary line per criterion is printed at the end.

Criteria 1 and 2 need the 12 converted public datasets. Point the
``SPARSEHR_DATASETS`` environment variable at a batch manifest listing them
in set order 1..12 (see README); without it those two criteria are skipped
and criterion 3 is the synthetic substitute.
"""

import os
import time

import numpy as np
import pytest

from sparsehr.cleanse import subtract_and_threshold
from sparsehr.cli import batch
from sparsehr.pipeline import RunConfig, estimate, evaluate_result, joint_spectra, passband_peak, periodogram_spectra
from sparsehr.preprocess import make_windows
from sparsehr.spectrum import SolverConfig, bin_to_bpm, build_dictionary, solve_mmv
from sparsehr.synth import (
    NEAR_COLLISION_HR_BIN,
    SynthSpec,
    generate,
    near_collision_spec,
    treadmill_spec,
)
from sparsehr.track import Stage, TrackerState, run_tracker, smooth_trend

from .conftest import record_criterion
from .streams import check_invariants, random_stream

# Target per-dataset Error1 (BPM) for sets 1..12, and the pooled target.
REFERENCE_ERROR1 = (1.33, 1.75, 1.47, 1.48, 0.69, 1.32, 0.71, 0.56, 0.49, 3.81, 0.78, 1.04)
REFERENCE_POOLED_ERROR1 = 1.28


@pytest.fixture(scope="module")
def dataset_run(tmp_path_factory):
    manifest = os.environ.get("SPARSEHR_DATASETS")
    if not manifest:
        return None
    return batch(manifest, RunConfig(), tmp_path_factory.mktemp("datasets"))


def test_criterion_1_dataset_reproduction(dataset_run):
    if dataset_run is None:
        record_criterion(1, "SKIP", "SPARSEHR_DATASETS not set; see criterion 3")
        pytest.skip("public datasets not available")
    per = [r["error1_bpm"] for r in dataset_run["datasets"].values()]
    pooled = dataset_run["pooled"]["error1_bpm"]
    within = sum(e <= ref + 1.5 for e, ref in zip(per, REFERENCE_ERROR1))
    ok = len(per) == 12 and pooled <= 2.0 and within >= 10
    record_criterion(1, "PASS" if ok else "FAIL",
                     f"pooled Error1 {pooled:.2f} BPM (<= 2.0), {within}/12 sets within reference + 1.5")
    assert ok


def test_criterion_2_agreement(dataset_run):
    if dataset_run is None:
        record_criterion(2, "SKIP", "SPARSEHR_DATASETS not set")
        pytest.skip("public datasets not available")
    r = dataset_run["pooled"]["pearson_r"]
    lo, hi = dataset_run["pooled"]["loa"]
    ok = r >= 0.98 and lo >= -8 and hi <= 8
    record_criterion(2, "PASS" if ok else "FAIL", f"Pearson {r:.4f} (>= 0.98), LOA [{lo:.2f}, {hi:.2f}] in [-8, 8]")
    assert ok


def test_criterion_3_synthetic_treadmill():
    rec, truth = generate(treadmill_spec(seed=0))
    report = evaluate_result(estimate(rec), truth)
    ok = report.error1_bpm <= 1.5
    record_criterion(3, "PASS" if ok else "FAIL",
                     f"5-minute treadmill synthetic Error1 {report.error1_bpm:.2f} BPM (<= 1.5)")
    assert ok


def planted_instance(r, M=20, N=64, L=4, k=3):
    rows = np.sort(r.choice(N, size=k, replace=False))
    X = np.zeros((N, L), complex)
    X[rows] = r.normal(size=(k, L)) + 1j * r.normal(size=(k, L))
    return rows, X


def recovered(X_hat, rows):
    norms = np.linalg.norm(X_hat, axis=1)
    return set(np.flatnonzero(norms > 1e-3 * norms.max())) == set(rows)


def test_criterion_4_solver_recovery():
    t0 = time.perf_counter()
    D = build_dictionary(20, 64)
    cfg = SolverConfig(max_iters=100)
    r = np.random.default_rng(2024)
    mmv_ok = smv_ok = 0
    worst = 0.0
    for _ in range(100):
        rows, X = planted_instance(r)
        Y = D.Phi @ X
        out = solve_mmv(Y, D, cfg)
        mmv_ok += recovered(out.X, rows)
        worst = max(worst, np.linalg.norm(Y - D.Phi @ out.X) / np.linalg.norm(Y))
        smv_ok += recovered(solve_mmv(Y[:, 0], D, cfg).X, rows)
    elapsed = time.perf_counter() - t0
    ok = mmv_ok >= 95 and worst < 1e-3 and smv_ok <= mmv_ok and elapsed < 30
    record_criterion(4, "PASS" if ok else "FAIL",
                     f"MMV recovery {mmv_ok}/100, SMV {smv_ok}/100, max residual {worst:.1e}, {elapsed:.1f} s")
    assert ok


def test_criterion_5_cleansing_properties():
    r = np.random.default_rng(7)
    N = 64
    counts = {"monotonicity": 0, "support": 0, "floor": 0}
    for _ in range(1000):
        S = r.exponential(1.0, (N, 4)) * (r.random((N, 4)) < 0.6)
        base = subtract_and_threshold(S[:, 0], S[:, 1:])
        counts["support"] += set(np.flatnonzero(base.s)) <= set(np.flatnonzero(S[:, 0]))
        nz = base.s[base.s > 0]
        counts["floor"] += base.threshold == base.p_max / 4 and (nz.size == 0 or nz.min() >= base.threshold)
        acc = S[:, 1:].copy()
        acc[r.integers(N), r.integers(3)] += r.exponential(1.0)
        counts["monotonicity"] += bool(np.all(subtract_and_threshold(S[:, 0], acc).s <= base.s))
    ok = all(v == 1000 for v in counts.values())
    record_criterion(5, "PASS" if ok else "FAIL",
                     ", ".join(f"{k} {v}/1000" for k, v in counts.items()))
    assert ok


def test_criterion_6_tracker_invariants():
    cfg = RunConfig()
    problems = []
    for seed in range(200):
        spectra = random_stream(seed)
        res = run_tracker(spectra, cfg.tracker)
        problems += check_invariants(spectra, res, cfg.tracker)
        if run_tracker(spectra, cfg.tracker).decisions != res.decisions:
            problems.append(f"stream {seed}: nondeterministic")

    scenarios = [
        treadmill_spec(seed=1),
        near_collision_spec(),
        SynthSpec(duration_s=60, hr_trace_bpm=150.0, noise_sigma=0.05, seed=2),
        SynthSpec(duration_s=240, hr_trace_bpm=((0, 120), (240, 180)), noise_sigma=0.05, seed=5),
    ]
    for spec in scenarios:
        rec, _ = generate(spec)
        a, b = estimate(rec), estimate(rec)
        problems += [f"{spec.id} {p}" for p in check_invariants(a.spectra, a.track, cfg.tracker)]
        if a.track.decisions != b.track.decisions:
            problems.append(f"{spec.id}: nondeterministic")

    # Near collision: peak picked from each cleansed spectrum after the filter transient.
    rec, _ = generate(near_collision_spec())
    windows = make_windows(rec, cfg.pipeline)[1:]
    mmv, _ = joint_spectra(windows, build_dictionary(cfg.pipeline.window_samples, cfg.n_grid), cfg.solver)
    per = periodogram_spectra(windows, cfg.n_grid)
    mmv_err = [abs(passband_peak(s, cfg) - NEAR_COLLISION_HR_BIN) for s in mmv]
    per_err = [abs(passband_peak(s, cfg) - NEAR_COLLISION_HR_BIN) for s in per]
    locked = TrackerState(Stage.TRACKING, (NEAR_COLLISION_HR_BIN,),
                          (bin_to_bpm(NEAR_COLLISION_HR_BIN, 25, cfg.n_grid),), 0)
    tracked = [d.selected_bin for d in run_tracker(mmv, cfg.tracker, locked).decisions]
    near_ok = (max(mmv_err) <= 1 and min(per_err) >= 3
               and all(abs(k - NEAR_COLLISION_HR_BIN) <= 1 for k in tracked))

    ok = not problems and near_ok
    record_criterion(6, "PASS" if ok else "FAIL",
                     f"{len(problems)} invariant violations over 200 streams + 4 scenarios; near collision "
                     f"MMV error <= {max(mmv_err)} bins, periodogram error >= {min(per_err)} bins")
    assert not problems, problems[:10]
    assert near_ok


def test_criterion_7_smoother_oracle():
    r = np.random.default_rng(3)
    worst = 0.0
    for n in range(2, 31):
        for lam in (0.0, 0.1, 5.0, 20.0, 1e3):
            y = r.normal(100, 15, n)
            Dm = np.diff(np.eye(n), 2, axis=0)
            dense = np.linalg.solve(np.eye(n) + lam * Dm.T @ Dm, y)
            z, _ = smooth_trend(y, lam)
            worst = max(worst, float(np.max(np.abs(z - dense))))
    ok = worst < 1e-8
    record_criterion(7, "PASS" if ok else "FAIL", f"max deviation from dense solve {worst:.1e} (< 1e-8)")
    assert ok
