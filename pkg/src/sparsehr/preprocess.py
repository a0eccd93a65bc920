"""Bandpass filtering, decimation and windowing into MMV measurement matrices."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import signal

from .ingest import Recording


@dataclass(frozen=True)
class PipelineConfig:
    band_low_hz: float = 0.4
    band_high_hz: float = 4.0
    filter_order: int = 2
    target_rate_hz: float = 25.0
    window_s: float = 8.0
    step_s: float = 2.0
    zero_phase: bool = False

    def __post_init__(self):
        if not 0 < self.band_low_hz < self.band_high_hz < self.target_rate_hz / 2:
            raise ValueError(
                "need 0 < band_low_hz < band_high_hz < target_rate_hz / 2, got "
                f"{self.band_low_hz}, {self.band_high_hz}, {self.target_rate_hz}"
            )
        if not self.window_s > self.step_s > 0:
            raise ValueError(f"need window_s > step_s > 0, got {self.window_s}, {self.step_s}")
        if self.filter_order < 1:
            raise ValueError("filter_order must be >= 1")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_s * self.target_rate_hz))

    @property
    def step_samples(self) -> int:
        return int(round(self.step_s * self.target_rate_hz))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class WindowBatch:
    """One normalized window; ``Y`` is (M samples, L channels), PPG first."""

    Y: np.ndarray
    window_index: int
    t_start_s: float


def design_bandpass(fs: float, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Butterworth bandpass as second-order sections (bilinear transform)."""
    nyq = fs / 2
    if not 0 < cfg.band_low_hz < cfg.band_high_hz < nyq:
        raise ValueError(
            f"band [{cfg.band_low_hz}, {cfg.band_high_hz}] Hz infeasible at fs={fs} Hz"
        )
    return signal.butter(cfg.filter_order, [cfg.band_low_hz, cfg.band_high_hz],
                         btype="bandpass", output="sos", fs=fs)


def min_filter_length(cfg: PipelineConfig = PipelineConfig()) -> int:
    # Same as the default padding length of forward-backward SOS filtering.
    n_sections = cfg.filter_order
    return 3 * (2 * n_sections + 1) + 1


def bandpass(x, fs: float, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Filter ``x`` with the configured Butterworth bandpass.

    Filtering is causal (``sosfilt``, started from the steady state for a
    constant input equal to ``x[0]``) unless ``cfg.zero_phase`` is set, in
    which case the forward-backward ``sosfiltfilt`` is used.
    """
    sos = design_bandpass(fs, cfg)
    x = np.asarray(x, dtype=float)
    if x.size < min_filter_length(cfg):
        raise ValueError(f"signal of length {x.size} shorter than filter warm-up {min_filter_length(cfg)}")
    if cfg.zero_phase:
        return signal.sosfiltfilt(sos, x)
    y, _ = signal.sosfilt(sos, x, zi=signal.sosfilt_zi(sos) * x[0])
    return y


def decimation_factor(fs_in: float, fs_out: float) -> int:
    ratio = fs_in / fs_out
    D = int(round(ratio))
    if D < 1 or abs(ratio - D) > 1e-9 * ratio:
        raise ValueError(f"fs_in/fs_out = {fs_in}/{fs_out} is not a positive integer")
    return D


def decimate(x, fs_in: float, fs_out: float) -> np.ndarray:
    """Keep every D-th sample, ``D = fs_in / fs_out``; no anti-alias filter is applied."""
    D = decimation_factor(fs_in, fs_out)
    x = np.asarray(x, dtype=float)
    n = x.size // D
    return x[: n * D : D].copy()


def normalize_columns(Y, constant=None) -> np.ndarray:
    """Remove each column's mean and scale it to unit (population) variance.

    Constant columns, and those flagged in the boolean ``constant`` mask,
    become all zeros.
    """
    Y = np.asarray(Y, dtype=float)
    centered = Y - Y.mean(axis=0)
    std = centered.std(axis=0)
    scale = np.abs(Y).max(axis=0)
    flat = std <= 1e-12 * np.where(scale > 0, scale, 1.0)
    constant = flat if constant is None else flat | np.asarray(constant, dtype=bool)
    out = np.zeros_like(centered)
    out[:, ~constant] = centered[:, ~constant] / std[~constant]
    return out


def condition(rec: Recording, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Filter at the recording's native rate, then decimate; returns (n, 4)."""
    fs = rec.sample_rate_hz
    decimation_factor(fs, cfg.target_rate_hz)
    cols = [decimate(bandpass(ch, fs, cfg), fs, cfg.target_rate_hz) for ch in rec.channels().T]
    return np.column_stack(cols)


def window_count(n_samples: int, cfg: PipelineConfig = PipelineConfig()) -> int:
    M, step = cfg.window_samples, cfg.step_samples
    if n_samples < M:
        return 0
    return (n_samples - M) // step + 1


def slice_windows(data, cfg: PipelineConfig = PipelineConfig(), raw=None, factor=1) -> list[WindowBatch]:
    """Cut already-conditioned (n, L) data into normalized overlapping windows.

    ``raw`` is the unfiltered data at ``factor`` times the conditioned rate;
    a channel that is constant over a window's raw span is zeroed.
    """
    data = np.asarray(data, dtype=float)
    M, step = cfg.window_samples, cfg.step_samples
    count = window_count(data.shape[0], cfg)
    if count == 0:
        raise ValueError(
            f"recording has {data.shape[0]} samples at {cfg.target_rate_hz} Hz, "
            f"shorter than one {M}-sample window"
        )
    batches = []
    for i in range(count):
        start = i * step
        constant = None
        if raw is not None:
            span = raw[start * factor:(start + M) * factor]
            constant = np.all(span == span[0], axis=0)
        Y = normalize_columns(data[start:start + M], constant)
        Y.setflags(write=False)
        batches.append(WindowBatch(Y=Y, window_index=i, t_start_s=start / cfg.target_rate_hz))
    return batches


def make_windows(rec: Recording, cfg: PipelineConfig = PipelineConfig()) -> list[WindowBatch]:
    """Bandpass, decimate and window a recording.

    Window ``i`` covers decimated samples ``[i * step, i * step + M)`` and
    every channel is normalized independently within the window.
    """
    D = decimation_factor(rec.sample_rate_hz, cfg.target_rate_hz)
    if len(rec) // D < cfg.window_samples:
        raise ValueError(
            f"recording of {rec.duration_s:.3f} s is shorter than one {cfg.window_s:g} s window"
        )
    return slice_windows(condition(rec, cfg), cfg, raw=rec.channels(), factor=D)
