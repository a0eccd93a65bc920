"""Wrist-PPG heart-rate estimation with joint sparse spectrum reconstruction.

PPG and three accelerometer axes are windowed, their spectra estimated jointly
on a redundant DFT grid with Regularized M-FOCUSS, motion peaks subtracted,
and the heart-rate peak followed by a small tracking state machine.
"""

from .cleanse import CleansedSpectrum, spectral_subtract
from .ingest import GroundTruthTrace, IngestError, Recording, load_recording, load_truth
from .metrics import EvaluationReport, bland_altman, evaluate
from .pipeline import RunConfig, estimate
from .preprocess import PipelineConfig, WindowBatch, bandpass, decimate, make_windows
from .spectrum import (
    Dictionary,
    SolverConfig,
    SpectrumSet,
    bin_to_bpm,
    build_dictionary,
    periodogram,
    solve_mmv,
)
from .synth import MATone, SynthSpec, generate
from .track import TrackerConfig, TrackerState, WindowDecision, run_tracker, smooth_trend, step

__version__ = "0.1.0"
