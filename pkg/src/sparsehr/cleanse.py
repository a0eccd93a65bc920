"""Removal of motion-artifact peaks from a PPG power spectrum.

Accelerometer spectra share their active bins with the PPG spectrum when all
four channels are estimated jointly, so motion peaks can be removed by plain
per-bin subtraction followed by a relative threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectrum import SpectrumSet


@dataclass(frozen=True)
class CleansedSpectrum:
    """PPG spectrum after subtraction and thresholding.

    ``degenerate`` is set when nothing survives subtraction (``p_max == 0``).
    """

    s: np.ndarray
    p_max: float
    threshold: float
    degenerate: bool = False

    @property
    def n_bins(self) -> int:
        return self.s.size


def subtract_and_threshold(ppg, accel, ratio: float = 0.25, pmax_bins=None) -> CleansedSpectrum:
    """Core of :func:`spectral_subtract` on raw arrays.

    Parameters
    ----------
    ppg : array-like, shape (N,)
        PPG power spectrum.
    accel : array-like, shape (N, K)
        Reference (accelerometer) power spectra, one per column.
    ratio : float
        Coefficients below ``ratio * p_max`` are zeroed.
    pmax_bins : slice or None
        Bins over which ``p_max`` is taken. ``None`` uses every bin, which for
        the conjugate-symmetric spectra of real windows equals the maximum
        over the lower half.
    """
    ppg = np.asarray(ppg, dtype=float)
    accel = np.asarray(accel, dtype=float)
    if accel.ndim == 1:
        accel = accel[:, None]
    if accel.shape[0] != ppg.size:
        raise ValueError("PPG and reference spectra must have the same number of bins")
    ceiling = accel.max(axis=1) if accel.shape[1] else np.zeros_like(ppg)
    d = np.maximum(ppg - ceiling, 0.0)
    region = d if pmax_bins is None else d[pmax_bins]
    p_max = float(region.max()) if region.size else 0.0
    if p_max <= 0:
        return CleansedSpectrum(s=np.zeros_like(d), p_max=0.0, threshold=0.0, degenerate=True)
    threshold = ratio * p_max
    d[d < threshold] = 0.0
    d.setflags(write=False)
    return CleansedSpectrum(s=d, p_max=p_max, threshold=threshold)


def spectral_subtract(spectra: SpectrumSet, ratio: float = 0.25, pmax_bins=None) -> CleansedSpectrum:
    """Cleanse the PPG column (0) of a 4-channel spectrum set using columns 1..3."""
    S = np.asarray(spectra.S)
    if S.ndim != 2 or S.shape[1] != 4:
        raise ValueError(f"expected 4 spectra (PPG + 3 accel axes), got shape {S.shape}")
    return subtract_and_threshold(S[:, 0], S[:, 1:], ratio=ratio, pmax_bins=pmax_bins)
