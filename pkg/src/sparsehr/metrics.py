"""Error statistics for heart-rate traces against a reference."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

LOA_Z = 1.96


class DegenerateStatisticWarning(RuntimeWarning):
    """A statistic is undefined for the given input (e.g. zero variance)."""


@dataclass(frozen=True)
class EvaluationReport:
    error1_bpm: float
    error2_fraction: float
    abs_errors: np.ndarray
    loa: tuple[float, float]
    mu: float
    sigma: float
    pearson_r: float
    fit_slope: float
    fit_intercept: float
    r_squared: float
    window_count: int
    abs_error_sd: float = float("nan")
    error2_sd: float = float("nan")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["abs_errors"] = [float(v) for v in self.abs_errors]
        d["loa"] = [float(v) for v in self.loa]
        return d

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2, allow_nan=True)


def _pair(est, truth):
    est = np.asarray(est, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if est.size != truth.size:
        raise ValueError(f"length mismatch: {est.size} estimates vs {truth.size} reference values")
    if est.size < 2:
        raise ValueError("need at least 2 windows")
    return est, truth


def bland_altman(est, truth, ddof: int = 0):
    """Bland-Altman points ``(mean, est - truth)`` and limits of agreement.

    Returns ``(points, (low, high), mu, sigma)``; ``sigma`` uses ``ddof``
    (0 = population convention).
    """
    est, truth = _pair(est, truth)
    diff = est - truth
    points = np.column_stack([(est + truth) / 2, diff])
    mu = float(diff.mean())
    sigma = float(diff.std(ddof=ddof))
    return points, (mu - LOA_Z * sigma, mu + LOA_Z * sigma), mu, sigma


def pearson(x, y) -> float:
    x, y = _pair(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0:
        warnings.warn("Pearson correlation undefined for constant input",
                      DegenerateStatisticWarning, stacklevel=2)
        return float("nan")
    return float(np.clip(np.sum(dx * dy) / denom, -1.0, 1.0))


def linear_fit(x, y) -> tuple[float, float]:
    """Least-squares line ``y = slope * x + intercept``."""
    x, y = _pair(x, y)
    dx = x - x.mean()
    sxx = np.sum(dx * dx)
    if sxx == 0:
        warnings.warn("regression slope undefined for constant reference",
                      DegenerateStatisticWarning, stacklevel=2)
        return float("nan"), float("nan")
    slope = float(np.sum(dx * (y - y.mean())) / sxx)
    return slope, float(y.mean() - slope * x.mean())


def evaluate(est, truth, ddof: int = 0) -> EvaluationReport:
    """Compare estimates with reference values window by window.

    ``error1_bpm`` is the mean absolute error, ``error2_fraction`` the mean
    absolute error relative to the reference (a fraction, not percent).
    Pearson r and the regression of estimates on reference values are NaN
    (with a :class:`DegenerateStatisticWarning`) when an input is constant.
    """
    est, truth = _pair(est, truth)
    abs_err = np.abs(est - truth)
    rel = abs_err / truth
    _, loa, mu, sigma = bland_altman(est, truth, ddof=ddof)
    r = pearson(truth, est)
    slope, intercept = linear_fit(truth, est)
    return EvaluationReport(
        error1_bpm=float(abs_err.mean()),
        error2_fraction=float(rel.mean()),
        abs_errors=abs_err,
        loa=loa,
        mu=mu,
        sigma=sigma,
        pearson_r=r,
        fit_slope=slope,
        fit_intercept=intercept,
        r_squared=r * r,
        window_count=int(est.size),
        abs_error_sd=float(abs_err.std(ddof=ddof)),
        error2_sd=float(rel.std(ddof=ddof)),
    )


def pooled_summary(reports: dict[str, EvaluationReport], ests, truths, ddof: int = 0) -> dict:
    """Aggregate several datasets.

    Reports both the pooled statistics over all windows and the mean/SD of
    the per-dataset Error1 and Error2 values.
    """
    pooled = evaluate(np.concatenate(ests), np.concatenate(truths), ddof=ddof)
    e1 = np.array([r.error1_bpm for r in reports.values()])
    e2 = np.array([r.error2_fraction for r in reports.values()])
    return {
        "pooled": pooled,
        "dataset_mean_error1_bpm": float(e1.mean()),
        "dataset_sd_error1_bpm": float(e1.std(ddof=ddof)),
        "dataset_mean_error2_fraction": float(e2.mean()),
        "dataset_sd_error2_fraction": float(e2.std(ddof=ddof)),
    }
