"""Joint sparse spectrum estimation over a redundant DFT dictionary.

The solver is Regularized M-FOCUSS: an iteratively reweighted minimum-norm
solver that drives the solution matrix towards row sparsity, so that every
channel shares the same few active frequency bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when the regularized inner system cannot be factorized."""


@dataclass(frozen=True)
class Dictionary:
    """Redundant DFT basis with entries ``exp(j 2 pi m n / N)``."""

    Phi: np.ndarray
    M: int
    N: int


@dataclass(frozen=True)
class SolverConfig:
    """Regularized M-FOCUSS parameters.

    ``prune_tol`` is relative to the largest row norm; ``conv_tol`` is the
    relative change of the solution matrix between iterations.
    """

    p: float = 0.8
    lam: float = 1e-10
    max_iters: int = 4
    prune_tol: float = 1e-4
    conv_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.prune_tol < 0 or self.conv_tol < 0:
            raise ValueError("prune_tol and conv_tol must be nonnegative")


@dataclass(frozen=True)
class SpectrumSet:
    """Power spectra ``S = |X|**2`` (N x L) and the complex solution ``X``."""

    S: np.ndarray
    X: np.ndarray
    n_iters: int = 0

    @property
    def n_bins(self) -> int:
        return self.S.shape[0]

    @property
    def n_channels(self) -> int:
        return self.S.shape[1]


def build_dictionary(M: int, N: int) -> Dictionary:
    """Return the ``M x N`` redundant DFT dictionary.

    The exponent ``m * n`` is reduced modulo ``N`` before evaluation so every
    entry has unit modulus to machine precision even for large grids.
    """
    M, N = int(M), int(N)
    if M <= 0:
        raise ValueError(f"M must be positive, got {M}")
    if M >= N:
        raise ValueError(f"dictionary needs M < N, got M={M}, N={N}")
    mn = np.outer(np.arange(M), np.arange(N)) % N
    Phi = np.exp(2j * np.pi * mn / N)
    Phi.setflags(write=False)
    return Dictionary(Phi=Phi, M=M, N=N)


def _weighted_min_norm(A, Y, lam):
    # Solves (A A^H + lam I) Z = Y by Cholesky; returns A^H Z.
    G = A @ A.conj().T
    if lam:
        G[np.diag_indices_from(G)] += lam
    try:
        factor = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "inner system A A^H + lam I is not positive definite; "
            "increase lam or reduce max_iters"
        ) from exc
    Z = scipy.linalg.cho_solve(factor, Y, check_finite=False)
    if not np.all(np.isfinite(Z)):
        raise SingularSystemError("inner solve produced non-finite values")
    return A.conj().T @ Z


def solve_mmv(Y, dictionary: Dictionary, cfg: SolverConfig = SolverConfig()) -> SpectrumSet:
    """Estimate a row-sparse solution of ``Y = Phi X`` with Regularized M-FOCUSS.

    Parameters
    ----------
    Y : array-like, shape (M,) or (M, L)
        Measurement matrix, one channel per column. A 1-D input is treated as
        a single measurement vector (L = 1).
    dictionary : Dictionary
        Redundant DFT basis with ``dictionary.M`` rows.
    cfg : SolverConfig, optional
        Sparsity exponent, regularization and stopping parameters.

    Returns
    -------
    SpectrumSet
        ``X`` has shape (N, L); rows pruned during the iterations are exactly
        zero. ``S`` holds the per-channel power spectra ``|X|**2``.

    Raises
    ------
    ValueError
        If the row count of ``Y`` differs from ``dictionary.M``.
    SingularSystemError
        If the inner ``M x M`` system cannot be factorized.

    Notes
    -----
    The first pass uses unit weights and yields the regularized minimum-norm
    solution. Every later pass sets row weights ``w_i = ||x_i||**(1 - p/2)``
    from the previous estimate and solves
    ``X = W A^H (A A^H + lam I)^-1 Y`` with ``A = Phi W``. The first pass
    counts towards ``max_iters``.
    """
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != dictionary.M:
        raise ValueError(
            f"Y must have {dictionary.M} rows to match the dictionary, got shape {Y.shape}"
        )
    Y = Y.astype(np.complex128 if np.iscomplexobj(Y) else np.float64)
    N, L = dictionary.N, Y.shape[1]
    Phi = dictionary.Phi

    X = np.zeros((N, L), dtype=np.complex128)
    if not np.any(Y):
        return SpectrumSet(S=np.zeros((N, L)), X=X, n_iters=0)

    active = np.arange(N)
    weights = np.ones(N)
    n_iters = 0
    for n_iters in range(1, cfg.max_iters + 1):
        A = Phi[:, active] * weights
        X_new = np.zeros_like(X)
        X_new[active] = weights[:, None] * _weighted_min_norm(A, Y, cfg.lam)

        row_norms = np.linalg.norm(X_new[active], axis=1)
        peak = row_norms.max()
        keep = row_norms > cfg.prune_tol * peak if peak > 0 else np.zeros(active.size, bool)
        X_new[active[~keep]] = 0
        active = active[keep]
        weights = row_norms[keep] ** (1 - cfg.p / 2)

        change = np.linalg.norm(X_new - X)
        scale = np.linalg.norm(X_new)
        X = X_new
        if active.size == 0 or (n_iters > 1 and change <= cfg.conv_tol * scale):
            break

    S = np.abs(X) ** 2
    return SpectrumSet(S=S, X=X, n_iters=n_iters)


def periodogram(y, N: int) -> np.ndarray:
    """Zero-padded periodogram ``|FFT_N(y)|**2 / M`` of a length-M sequence."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("periodogram expects a 1-D sequence")
    M = y.size
    if M > N:
        raise ValueError(f"sequence length {M} exceeds grid size {N}")
    if M == 0:
        raise ValueError("empty sequence")
    return np.abs(np.fft.fft(y, n=N)) ** 2 / M


def periodogram_set(Y, N: int) -> SpectrumSet:
    """Per-channel periodograms packaged like an MMV result (X is the scaled DFT)."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    M = Y.shape[0]
    if M > N:
        raise ValueError(f"window length {M} exceeds grid size {N}")
    X = np.fft.fft(Y, n=N, axis=0) / np.sqrt(M)
    return SpectrumSet(S=np.abs(X) ** 2, X=X, n_iters=0)


def bin_to_bpm(k, fs: float, N: int) -> float:
    """Convert a frequency-bin index on the N-point grid to beats per minute."""
    if not 0 <= k < N / 2:
        raise ValueError(f"bin {k} outside the half spectrum [0, {N // 2})")
    return 60.0 * k * fs / N


def bpm_to_bin(bpm: float, fs: float, N: int) -> float:
    """Fractional bin position of a rate in BPM (inverse of :func:`bin_to_bpm`)."""
    return bpm * N / (60.0 * fs)
