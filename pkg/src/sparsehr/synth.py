"""Synthetic PPG / accelerometer recordings with a known heart-rate trace.

PPG is modelled as a sum of sinusoids at multiples of the instantaneous
heart rate plus motion-artifact (MA) tones; the accelerometer axes carry
only the MA tones flagged as present there. Everything is driven by a seeded
``numpy.random.Generator`` (PCG64) so recordings are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ingest import GroundTruthTrace, Recording


def _as_knots(value):
    """Normalize a constant or a sequence of (t, value) pairs into knot arrays."""
    if np.isscalar(value):
        return np.array([0.0]), np.array([float(value)])
    pts = np.asarray(value, dtype=float).reshape(-1, 2)
    order = np.argsort(pts[:, 0], kind="stable")
    return pts[order, 0], pts[order, 1]


def piecewise_linear(knots, t) -> np.ndarray:
    """Evaluate a constant or (t, value) knot list at times ``t``, held flat outside."""
    kt, kv = _as_knots(knots)
    return np.interp(t, kt, kv)


@dataclass(frozen=True)
class MATone:
    """Motion-artifact component.

    ``freq_hz`` and ``amplitude`` are constants or (t, value) knot lists.
    ``accel_gains`` scales the tone on accelerometer axes x, y, z.
    """

    freq_hz: object
    amplitude: object = 1.0
    present_in_accel: bool = True
    accel_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class SynthSpec:
    duration_s: float
    fs: float = 125.0
    hr_trace_bpm: object = 150.0
    hr_harmonics: tuple = ((1, 1.0), (2, 0.4))
    ma_tones: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0
    window_s: float = 8.0
    step_s: float = 2.0
    id: str = "synthetic"

    def validate(self):
        if not self.duration_s > 0 or not self.fs > 0:
            raise ValueError("duration_s and fs must be positive")
        _, bpm = _as_knots(self.hr_trace_bpm)
        if np.any(bpm <= 40) or np.any(bpm >= 220):
            raise ValueError("heart-rate trace must stay within (40, 220) BPM")
        if any(a < 0 for _, a in self.hr_harmonics):
            raise ValueError("harmonic amplitudes must be nonnegative")
        for tone in self.ma_tones:
            _, amp = _as_knots(tone.amplitude)
            if np.any(amp < 0):
                raise ValueError("MA amplitudes must be nonnegative")
            _, f = _as_knots(tone.freq_hz)
            if np.any(f < 0) or np.any(f >= self.fs / 2):
                raise ValueError("MA frequency must lie in [0, fs/2)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not self.window_s > self.step_s > 0:
            raise ValueError("need window_s > step_s > 0")


def _phase(freq_hz, fs):
    # Exclusive cumulative sum: phase[0] == 0 and a constant f gives 2*pi*f*n/fs.
    f = np.asarray(freq_hz, dtype=float)
    return 2 * np.pi * np.concatenate(([0.0], np.cumsum(f[:-1]))) / fs


def heart_component(spec: SynthSpec, t=None) -> np.ndarray:
    """Noise-free heart-rate part of the PPG channel."""
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs if t is None else t
    phi = _phase(piecewise_linear(spec.hr_trace_bpm, t) / 60.0, spec.fs)
    out = np.zeros(n)
    for mult, amp in spec.hr_harmonics:
        out += amp * np.sin(mult * phi)
    return out


def truth_trace(spec: SynthSpec) -> np.ndarray:
    """Mean of the heart-rate trace over each analysis window."""
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs
    hr = piecewise_linear(spec.hr_trace_bpm, t)
    M = int(round(spec.window_s * spec.fs))
    step = int(round(spec.step_s * spec.fs))
    if n < M:
        return np.array([])
    count = (n - M) // step + 1
    return np.array([hr[i * step:i * step + M].mean() for i in range(count)])


def generate(spec: SynthSpec) -> tuple[Recording, GroundTruthTrace | None]:
    """Render ``spec`` into a recording and its per-window ground truth.

    The ground truth is ``None`` when the recording is shorter than one window.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_s * spec.fs))
    t = np.arange(n) / spec.fs

    ppg = heart_component(spec, t)
    accel = np.zeros((3, n))
    for tone in spec.ma_tones:
        psi = _phase(piecewise_linear(tone.freq_hz, t), spec.fs)
        amp = piecewise_linear(tone.amplitude, t)
        offsets = rng.uniform(0, 2 * np.pi, size=4)
        ppg += amp * np.sin(psi + offsets[0])
        if tone.present_in_accel:
            for axis in range(3):
                accel[axis] += tone.accel_gains[axis] * amp * np.sin(psi + offsets[axis + 1])
    if spec.noise_sigma > 0:
        ppg += rng.normal(0.0, spec.noise_sigma, n)
        accel += rng.normal(0.0, spec.noise_sigma, (3, n))

    rec = Recording(ppg=ppg, accel_x=accel[0], accel_y=accel[1], accel_z=accel[2],
                    sample_rate_hz=spec.fs, id=spec.id)
    truth = truth_trace(spec)
    return rec, (GroundTruthTrace(truth) if truth.size else None)


TREADMILL_HR_KNOTS = (
    (0, 78), (30, 82), (50, 108), (90, 118), (110, 146), (150, 158),
    (170, 134), (210, 124), (230, 150), (270, 164), (285, 140), (300, 118),
)


def treadmill_spec(seed: int = 0, duration_s: float = 300.0, noise_sigma: float = 0.1) -> SynthSpec:
    """Five-minute walk/run profile: rest, walk, run, walk, run, rest.

    Motion enters as an arm-swing tone and its second harmonic, both seen by
    the accelerometer and absent during the initial rest phase.
    """
    swing_hz = ((0, 0.9), (30, 0.9), (50, 1.1), (90, 1.1), (110, 1.45), (150, 1.45),
                (170, 1.1), (210, 1.1), (230, 1.45), (270, 1.45), (285, 0.9), (300, 0.9))
    swing_amp = ((0, 0.0), (25, 0.0), (35, 1.5), (270, 1.5), (290, 0.3))
    return SynthSpec(
        duration_s=duration_s,
        fs=125.0,
        hr_trace_bpm=TREADMILL_HR_KNOTS,
        hr_harmonics=((1, 1.0), (2, 0.3)),
        ma_tones=(
            MATone(freq_hz=swing_hz, amplitude=swing_amp, accel_gains=(1.0, 0.6, 0.3)),
            MATone(freq_hz=tuple((t, 2 * f) for t, f in swing_hz),
                   amplitude=tuple((t, 0.6 * a) for t, a in swing_amp),
                   accel_gains=(0.5, 1.0, 0.4)),
        ),
        noise_sigma=noise_sigma,
        seed=seed,
        id=f"treadmill-{seed}",
    )


NEAR_COLLISION_HR_BIN = 112


def near_collision_spec(seed: int = 9, noise_sigma: float = 0.0, duration_s: float = 20.0) -> SynthSpec:
    """Heart rate on bin 112 of the 1024-point / 25 Hz grid, MA tones at bins 105 and 100.

    Both MA tones are stronger than the heart-rate component and lie inside
    one periodogram main lobe of it (5.12 bins at an 8 s window). The default
    seed fixes tone phases for which the periodogram path loses the heart
    rate in every window after the filter transient.
    """
    grid_hz = 25.0 / 1024
    return SynthSpec(
        duration_s=duration_s,
        fs=125.0,
        hr_trace_bpm=NEAR_COLLISION_HR_BIN * grid_hz * 60,
        hr_harmonics=((1, 1.0),),
        ma_tones=(
            MATone(freq_hz=105 * grid_hz, amplitude=3.0, accel_gains=(1.0, 0.8, 0.5)),
            MATone(freq_hz=100 * grid_hz, amplitude=2.0, accel_gains=(0.4, 1.0, 0.7)),
        ),
        noise_sigma=noise_sigma,
        seed=seed,
        id=f"near-collision-{seed}",
    )
