"""Evaluation metrics for flow prediction: RMSE, MAE, CPC, relative change.

All functions accept anything array-like (flat series or stacked OD
matrices) and reduce over every element, so a batch of per-interval
matrices can be scored in one call.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rmse", "mae", "cpc", "relative_change"]


def _as_pair(predicted, actual) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise ValueError(f"shape mismatch: predicted {p.shape} vs actual {a.shape}")
    if p.size == 0:
        raise ValueError("empty input")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
        raise ValueError("non-finite values in prediction pair")
    return p, a


def rmse(predicted, actual) -> float:
    """Root mean squared error over all elements."""
    p, a = _as_pair(predicted, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(predicted, actual) -> float:
    """Mean absolute error over all elements."""
    p, a = _as_pair(predicted, actual)
    return float(np.mean(np.abs(p - a)))


def cpc(predicted_od, actual_od) -> float:
    """Common Part of Commuters between two non-negative flow matrices.

    ``2 * sum(min(pred, actual)) / (sum(pred) + sum(actual))``, in [0, 1].
    Identical matrices score 1, disjoint supports score 0.  Two all-zero
    matrices are identical empty flows and score 1; when exactly one side
    is all-zero the formula itself yields 0.
    """
    p, a = _as_pair(predicted_od, actual_od)
    if np.any(p < 0) or np.any(a < 0):
        raise ValueError("cpc requires non-negative entries")
    denom = float(p.sum() + a.sum())
    if denom == 0.0:
        return 1.0
    return float(2.0 * np.minimum(p, a).sum() / denom)


def relative_change(candidate: float, baseline: float) -> float:
    """Signed fractional change of ``candidate`` relative to ``baseline``."""
    if baseline == 0:
        raise ValueError("relative change undefined for zero baseline")
    return (candidate - baseline) / baseline
