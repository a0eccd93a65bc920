"""End-to-end heart-rate estimation: windows -> joint spectra -> cleansing -> tracking."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .cleanse import CleansedSpectrum, spectral_subtract
from .ingest import GroundTruthTrace, Recording
from .metrics import EvaluationReport, evaluate
from .preprocess import PipelineConfig, WindowBatch, make_windows
from .spectrum import Dictionary, SolverConfig, build_dictionary, periodogram_set, solve_mmv
from .track import TrackerConfig, TrackResult, band_bins, run_tracker


def _build(cls, data):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field(s): {', '.join(sorted(unknown))}")
    return cls(**data)


@dataclass(frozen=True)
class RunConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    n_grid: int = 1024
    skip_seconds: float = 0.0
    # Take the cleansing p_max over the bandpass bins only, instead of every bin.
    pmax_passband_only: bool = False

    def __post_init__(self):
        if self.skip_seconds < 0:
            raise ValueError("skip_seconds must be nonnegative")
        if self.tracker.sample_rate_hz != self.pipeline.target_rate_hz:
            object.__setattr__(self, "tracker",
                               _build(TrackerConfig, {**asdict(self.tracker),
                                                      "sample_rate_hz": self.pipeline.target_rate_hz}))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tracker"]["init_band_hz"] = list(d["tracker"]["init_band_hz"])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        kwargs = {}
        for key, sub in (("pipeline", PipelineConfig), ("solver", SolverConfig), ("tracker", TrackerConfig)):
            if key in data:
                kwargs[key] = _build(sub, data.pop(key))
        unknown = set(data) - {"n_grid", "skip_seconds", "pmax_passband_only"}
        if unknown:
            raise ValueError(f"unknown RunConfig field(s): {', '.join(sorted(unknown))}")
        return cls(**kwargs, **data)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class PipelineResult:
    windows: list[WindowBatch]
    spectra: list[CleansedSpectrum]
    track: TrackResult
    raw_spectra: list | None = None

    @property
    def bpm(self) -> np.ndarray:
        return self.track.bpm

    @property
    def window_indices(self) -> np.ndarray:
        return np.array([w.window_index for w in self.windows], dtype=int)


def kept_windows(windows, skip_seconds: float):
    return [w for w in windows if w.t_start_s >= skip_seconds - 1e-9]


def pmax_region(cfg: RunConfig):
    """Bins over which cleansing takes p_max: ``None`` (all) or the passband slice."""
    if not cfg.pmax_passband_only:
        return None
    lo, hi = band_bins((cfg.pipeline.band_low_hz, cfg.pipeline.band_high_hz),
                       cfg.pipeline.target_rate_hz, cfg.n_grid)
    return slice(lo, hi + 1)


def joint_spectra(windows, dictionary: Dictionary, solver: SolverConfig, keep_raw=False, pmax_bins=None):
    """Solve and cleanse each window independently; returns (cleansed, raw or None)."""
    cleansed, raw = [], []
    for w in windows:
        spec = solve_mmv(w.Y, dictionary, solver)
        cleansed.append(spectral_subtract(spec, pmax_bins=pmax_bins))
        if keep_raw:
            raw.append(spec)
    return cleansed, (raw if keep_raw else None)


def periodogram_spectra(windows, n_grid: int, pmax_bins=None):
    return [spectral_subtract(periodogram_set(w.Y, n_grid), pmax_bins=pmax_bins) for w in windows]


def estimate(rec: Recording, cfg: RunConfig = RunConfig(), keep_raw=False) -> PipelineResult:
    """Run the full estimator on ``rec``; windows before ``skip_seconds`` are dropped."""
    windows = kept_windows(make_windows(rec, cfg.pipeline), cfg.skip_seconds)
    if not windows:
        raise ValueError(f"no windows left after skipping {cfg.skip_seconds} s")
    dictionary = build_dictionary(cfg.pipeline.window_samples, cfg.n_grid)
    cleansed, raw = joint_spectra(windows, dictionary, cfg.solver, keep_raw, pmax_region(cfg))
    return PipelineResult(windows, cleansed, run_tracker(cleansed, cfg.tracker), raw)


def paired(result: PipelineResult, truth: GroundTruthTrace):
    """Estimates and truth for windows that produced an output."""
    idx = result.window_indices
    if idx.max() >= len(truth):
        raise ValueError(
            f"ground truth has {len(truth)} values but window {idx.max()} was analysed"
        )
    est = result.bpm
    ref = truth.bpm_true[idx]
    ok = ~np.isnan(est)
    return est[ok], ref[ok], idx[ok]


def evaluate_result(result: PipelineResult, truth: GroundTruthTrace) -> EvaluationReport:
    est, ref, _ = paired(result, truth)
    return evaluate(est, ref)


def passband_peak(s: CleansedSpectrum, cfg: RunConfig = RunConfig()) -> int | None:
    """Largest remaining bin inside the bandpass range, or None if all zero."""
    lo, hi = band_bins((cfg.pipeline.band_low_hz, cfg.pipeline.band_high_hz),
                       cfg.pipeline.target_rate_hz, s.n_bins)
    seg = s.s[lo:hi + 1]
    if not np.any(seg > 0):
        return None
    return lo + int(np.argmax(seg))
