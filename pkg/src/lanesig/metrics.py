"""Evaluation metrics for the flow and cost models."""

from __future__ import annotations

import numpy as np


def mape(y: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean absolute percentage error over the strictly positive targets.

    Rows with ``y <= 0`` are excluded; if none remain the metric is undefined
    and a ValueError is raised.
    """
    y = np.asarray(y, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y.shape != y_pred.shape:
        raise ValueError("y and y_pred must have the same shape")
    keep = y > 0
    if not keep.any():
        raise ValueError("mape needs at least one positive target")
    return float(np.mean(np.abs(y[keep] - y_pred[keep]) / y[keep]))


def r2(y: np.ndarray, y_pred: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_res = float(np.sum((y - y_pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r2 undefined for a constant target")
    return 1.0 - ss_res / ss_tot


def adjusted_r2(y: np.ndarray, y_pred: np.ndarray, n_predictors: int) -> float:
    """R-squared penalized for predictor count: 1 - (1-R2)(n-1)/(n-p-1)."""
    n = len(np.asarray(y))
    if n <= n_predictors + 1:
        raise ValueError(
            f"adjusted_r2 needs n > p + 1 (got n={n}, p={n_predictors})"
        )
    return 1.0 - (1.0 - r2(y, y_pred)) * (n - 1) / (n - n_predictors - 1)
