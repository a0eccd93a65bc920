"""Heart-rate peak tracking over a stream of cleansed PPG spectra.

The tracker is a small state machine. It waits in ``INIT`` until the
0.8-2.5 Hz band of the spectrum is peaked enough (high kurtosis) to trust
its largest bin, then follows the heart-rate peak window by window
(``TRACKING``: selection plus a maximum-step verification) and falls back to
a trend-guided wide search (``DISCOVERY``) when the output has been stuck on
the same bin for several windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.linalg import solveh_banded

from .cleanse import CleansedSpectrum


class Stage(str, Enum):
    INIT = "Init"
    TRACKING = "Tracking"
    DISCOVERY = "Discovery"


RESET_BY_VERIFICATION = "reset_by_verification"
DISCOVERY_TRIGGERED = "discovery_triggered"
NO_OUTPUT = "no_output"


@dataclass(frozen=True)
class TrackerConfig:
    """Search widths (bins), smoothing parameters and gates of the tracker.

    ``stall_rule`` selects what counts towards the discovery trigger:
    ``"unchanged"`` counts every window whose output bin equals the previous
    one, ``"fallback"`` only windows where the previous bin was reused because
    verification rejected the pick or no peak was found.
    """

    delta1: int = 15
    delta2: int = 25
    delta3: int = 30
    kurtosis_threshold: float = 10.0
    init_band_hz: tuple[float, float] = (0.8, 2.5)
    max_step_bpm: float = 12.0
    H: int = 10
    K: int = 30
    smooth_small: float = 5.0
    smooth_large: float = 20.0
    stall_limit: int = 3
    sample_rate_hz: float = 25.0
    stall_rule: str = "unchanged"

    def __post_init__(self):
        object.__setattr__(self, "init_band_hz", tuple(self.init_band_hz))
        if not 0 < self.delta1 < self.delta2:
            raise ValueError("need 0 < delta1 < delta2")
        if self.delta3 <= 0:
            raise ValueError("delta3 must be positive")
        if not 0 < self.H < self.K:
            raise ValueError("need 0 < H < K")
        if self.stall_limit < 1 or self.max_step_bpm <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("stall_limit, max_step_bpm and sample_rate_hz must be positive")
        if self.smooth_small < 0 or self.smooth_large < 0:
            raise ValueError("smoothing parameters must be nonnegative")
        lo, hi = self.init_band_hz
        if not 0 <= lo < hi:
            raise ValueError(f"invalid init band {self.init_band_hz}")
        if self.stall_rule not in ("unchanged", "fallback"):
            raise ValueError(f"unknown stall_rule {self.stall_rule!r}")


@dataclass(frozen=True)
class TrackerState:
    stage: Stage = Stage.INIT
    loc_history: tuple[int, ...] = ()
    bpm_history: tuple[float, ...] = ()
    stall_count: int = 0


@dataclass(frozen=True)
class WindowDecision:
    bpm: float | None
    stage_used: Stage
    selected_bin: int | None
    flags: frozenset[str] = field(default_factory=frozenset)
    search_range: tuple[int, int] | None = None


def _bpm(k, fs, N):
    return 60.0 * k * fs / N


def band_bins(band_hz, fs: float, N: int) -> tuple[int, int]:
    """Inclusive bin range whose centre frequencies lie inside ``band_hz``."""
    lo = math.ceil(band_hz[0] * N / fs - 1e-9)
    hi = math.floor(band_hz[1] * N / fs + 1e-9)
    return lo, hi


def find_peaks(s, bin_range, max_peaks: int = 3) -> list[tuple[int, float]]:
    """Return up to ``max_peaks`` peaks of a thresholded spectrum in ``bin_range``.

    Each maximal run of nonzero bins inside the inclusive range contributes
    its largest bin (lowest index on ties). Peaks are ordered by value,
    largest first.
    """
    values = s.s if isinstance(s, CleansedSpectrum) else np.asarray(s, dtype=float)
    lo, hi = int(bin_range[0]), int(bin_range[1])
    if lo > hi:
        raise ValueError(f"empty search range [{lo}, {hi}]")
    if lo < 0 or hi >= values.size // 2:
        raise ValueError(f"search range [{lo}, {hi}] outside [0, {values.size // 2})")
    seg = values[lo:hi + 1]
    nz = np.concatenate(([False], seg > 0, [False]))
    edges = np.flatnonzero(np.diff(nz.astype(np.int8)))
    peaks = []
    for start, stop in zip(edges[::2], edges[1::2]):
        k = int(start) + int(np.argmax(seg[start:stop]))
        peaks.append((lo + k, float(seg[k])))
    peaks.sort(key=lambda p: (-p[1], p[0]))
    return peaks[:max_peaks]


def kurtosis(values) -> float:
    """Non-excess sample kurtosis ``m4 / m2**2``; 0 when the variance vanishes."""
    x = np.asarray(values, dtype=float)
    d = x - x.mean()
    m2 = np.mean(d ** 2)
    if m2 < 1e-15:
        return 0.0
    return float(np.mean(d ** 4) / m2 ** 2)


def spectral_kurtosis(s, band_hz, fs: float) -> float:
    """Kurtosis of the spectral coefficients inside ``band_hz``."""
    values = s.s if isinstance(s, CleansedSpectrum) else np.asarray(s, dtype=float)
    lo, hi = band_bins(band_hz, fs, values.size)
    if lo < 0 or hi >= values.size // 2 or lo > hi:
        raise ValueError(f"band {band_hz} Hz outside the spectrum at fs={fs}")
    if hi - lo + 1 < 4:
        raise ValueError(f"band {band_hz} Hz covers fewer than 4 bins")
    return kurtosis(values[lo:hi + 1])


def whittaker(y, lam: float) -> np.ndarray:
    """Whittaker smoother with a second-difference penalty.

    Solves ``(I + lam * D.T @ D) z = y`` where ``D`` is the second-difference
    matrix, using the symmetric pentadiagonal structure.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if lam == 0 or n < 3:
        return y.copy()
    # Upper banded form of D.T @ D (bandwidth 2).
    d0 = np.full(n, 6.0)
    d0[[0, -1]] = 1.0
    d0[[1, -2]] = 5.0
    d1 = np.full(n - 1, -4.0)
    d1[[0, -1]] = -2.0
    d2 = np.ones(n - 2)
    ab = np.zeros((3, n))
    ab[2] = 1.0 + lam * d0
    ab[1, 1:] = lam * d1
    ab[0, 2:] = lam * d2
    if n == 3:
        # Pattern above double-counts the single interior row for n = 3.
        ab[2] = 1.0 + lam * np.array([1.0, 4.0, 1.0])
        ab[1, 1:] = lam * np.array([-2.0, -2.0])
    return solveh_banded(ab, y)


def smooth_trend(history, smooth_param: float) -> tuple[np.ndarray, float]:
    """Smooth ``history`` and extrapolate one step ahead.

    Returns the smoothed sequence and ``z[-1] + (z[-1] - z[-2])``.
    """
    y = np.asarray(history, dtype=float)
    if y.size < 2:
        raise ValueError("trend prediction needs at least 2 points")
    z = whittaker(y, smooth_param)
    return z, float(2 * z[-1] - z[-2])


def _clip_range(center, delta, half):
    return max(0, center - delta), min(half - 1, center + delta)


def _push(state, loc, fs, N, K, **changes):
    locs = (state.loc_history + (int(loc),))[-K:]
    bpms = (state.bpm_history + (_bpm(loc, fs, N),))[-K:]
    return replace(state, loc_history=locs, bpm_history=bpms, **changes)


def step(state: TrackerState, s: CleansedSpectrum, cfg: TrackerConfig = TrackerConfig()):
    """Advance the tracker by one window.

    Returns the new state and a :class:`WindowDecision` describing what was
    emitted.
    """
    values = s.s
    N = values.size
    half = N // 2
    fs = cfg.sample_rate_hz

    if state.stage is Stage.INIT:
        lo, hi = band_bins(cfg.init_band_hz, fs, N)
        k = spectral_kurtosis(values, cfg.init_band_hz, fs)
        seg = values[lo:hi + 1]
        if k > cfg.kurtosis_threshold and seg.max() > 0:
            loc = lo + int(np.argmax(seg))
            new = _push(state, loc, fs, N, cfg.K, stage=Stage.TRACKING, stall_count=0)
            return new, WindowDecision(_bpm(loc, fs, N), Stage.INIT, loc, frozenset(), (lo, hi))
        return state, WindowDecision(None, Stage.INIT, None, frozenset({NO_OUTPUT}), (lo, hi))

    prev = state.loc_history[-1]
    prev_bpm = state.bpm_history[-1]

    if state.stage is Stage.DISCOVERY:
        pred = float(prev)
        if len(state.loc_history) >= 2:
            _, pred = smooth_trend(state.loc_history[-cfg.K:], cfg.smooth_large)
        predict_loc = min(max(int(round(pred)), 0), half - 1)
        rng = _clip_range(predict_loc, cfg.delta3, half)
        peaks = find_peaks(values, rng)
        loc = peaks[0][0] if peaks else predict_loc
        new = _push(state, loc, fs, N, cfg.K, stage=Stage.TRACKING, stall_count=0)
        decision = WindowDecision(_bpm(loc, fs, N), Stage.DISCOVERY, loc,
                                  frozenset({DISCOVERY_TRIGGERED}), rng)
        return new, decision

    # Peak selection.
    flags = set()
    fallback = False
    rng = _clip_range(prev, cfg.delta1, half)
    peaks = find_peaks(values, rng)
    if peaks:
        dist = [abs(b - prev) for b, _ in peaks]
        best = min(dist)
        tied = sorted(b for (b, _), d in zip(peaks, dist) if d == best)
        if len(tied) == 1:
            loc = tied[0]
        else:
            trend = 0.0
            recent = state.loc_history[-cfg.H:]
            if len(recent) >= 2:
                z, pred = smooth_trend(recent, cfg.smooth_small)
                trend = pred - z[-1]
                # A flat history leaves round-off sized slopes; count those as flat.
                if abs(trend) <= 1e-9 * max(1.0, abs(z[-1])):
                    trend = 0.0
            loc = tied[-1] if trend > 0 else tied[0]
    else:
        rng = _clip_range(prev, cfg.delta2, half)
        peaks = find_peaks(values, rng)
        if peaks:
            loc = peaks[0][0]
        else:
            loc = prev
            fallback = True

    # Peak verification.
    if abs(_bpm(loc, fs, N) - prev_bpm) > cfg.max_step_bpm:
        loc = prev
        flags.add(RESET_BY_VERIFICATION)
        fallback = True

    stalled = loc == prev and (cfg.stall_rule == "unchanged" or fallback)
    stall = state.stall_count + 1 if stalled else 0
    next_stage = Stage.DISCOVERY if stall >= cfg.stall_limit else Stage.TRACKING
    new = _push(state, loc, fs, N, cfg.K, stage=next_stage, stall_count=stall)
    return new, WindowDecision(_bpm(loc, fs, N), Stage.TRACKING, loc, frozenset(flags), rng)


@dataclass(frozen=True)
class TrackResult:
    decisions: list[WindowDecision]
    states: list[TrackerState]

    @property
    def bpm(self) -> np.ndarray:
        """Per-window estimates, NaN where nothing was emitted."""
        return np.array([np.nan if d.bpm is None else d.bpm for d in self.decisions])


def run_tracker(spectra, cfg: TrackerConfig = TrackerConfig(), state: TrackerState | None = None) -> TrackResult:
    """Fold :func:`step` over a sequence of cleansed spectra in window order."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("no spectra to track")
    state = state or TrackerState()
    decisions, states = [], []
    for s in spectra:
        state, decision = step(state, s, cfg)
        decisions.append(decision)
        states.append(state)
    return TrackResult(decisions=decisions, states=states)
