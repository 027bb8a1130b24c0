"""Partial dependence and per-direction flow contributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PdpCurve:
    """Centered partial dependence of one feature.

    ``values[i]`` is the dataset-average prediction with the feature forced
    to ``grid[i]``, minus the mean over the grid, so a negative value marks a
    region associated with smaller outputs than the rest of the range.
    ``quantile_ticks`` are deciles of the observed feature for rug marks.
    """

    feature_name: str
    grid: np.ndarray
    values: np.ndarray
    quantile_ticks: np.ndarray

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values must have the same length")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly increasing")


def _average_prediction(model, X: np.ndarray, feature: int, value: float) -> float:
    swapped = X.copy()
    swapped[:, feature] = value
    return float(np.mean(model.predict(swapped)))


def partial_dependence(
    model,
    X: np.ndarray,
    feature: int,
    grid: np.ndarray | None = None,
    n_points: int = 20,
    feature_name: str | None = None,
) -> PdpCurve:
    """Centered partial dependence of ``feature`` over ``grid``.

    The default grid spans the observed range of the feature with
    ``n_points`` even steps (collapsing to the unique values when there are
    fewer). A supplied grid must stay within the observed range.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("partial dependence needs a non-empty 2-D dataset")
    column = X[:, feature]
    lo, hi = float(column.min()), float(column.max())
    if grid is None:
        unique = np.unique(column)
        if len(unique) <= n_points:
            grid = unique
        else:
            grid = np.linspace(lo, hi, n_points)
    else:
        grid = np.asarray(grid, dtype=float)
        if len(grid) == 0:
            raise ValueError("grid must not be empty")
        if grid.min() < lo or grid.max() > hi:
            raise ValueError(
                f"grid [{grid.min()}, {grid.max()}] outside observed range [{lo}, {hi}]"
            )
    raw = np.array([_average_prediction(model, X, feature, v) for v in grid])
    ticks = np.quantile(column, np.linspace(0.1, 0.9, 9))
    name = feature_name if feature_name is not None else f"x{feature}"
    return PdpCurve(name, grid, raw - raw.mean(), ticks)


def evaluate_curve(curve: PdpCurve, values: np.ndarray) -> np.ndarray:
    """Read curve values at arbitrary points.

    Grid points evaluate exactly; points between them interpolate linearly
    and points beyond the grid clamp to the end values, which is the natural
    extension for tree models whose dependence is flat past the last split.
    """
    return np.interp(np.asarray(values, dtype=float), curve.grid, curve.values)


def _direction_indices(
    feature_names: tuple[str, ...], domain: str, n_directions: int
) -> list[int]:
    indices = []
    for k in range(n_directions):
        name = f"{domain}_{k}r_summary_max"
        if name not in feature_names:
            raise ValueError(f"dataset is missing direction feature {name!r}")
        indices.append(feature_names.index(name))
    return indices


def direction_curves(
    model,
    X: np.ndarray,
    feature_names: tuple[str, ...],
    domain: str = "oD",
    direction_labels: tuple[str, ...] = ("NE", "NW", "SW", "SE"),
) -> dict[str, PdpCurve]:
    """Centered dependence curve of each direction's peak-intensity feature.

    Grids are the observed values, so later evaluation at the same dataset
    is exact rather than interpolated.
    """
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("direction curves need a non-empty dataset")
    indices = _direction_indices(feature_names, domain, len(direction_labels))
    return {
        label: partial_dependence(
            model, X, idx, grid=np.unique(X[:, idx]), feature_name=feature_names[idx]
        )
        for label, idx in zip(direction_labels, indices)
    }


def direction_flow_delta(
    model,
    X: np.ndarray,
    feature_names: tuple[str, ...],
    domain: str = "oD",
    direction_labels: tuple[str, ...] = ("NE", "NW", "SW", "SE"),
    curves: dict[str, PdpCurve] | None = None,
) -> dict[str, float]:
    """Estimate each direction's flow contribution relative to the others.

    For every direction's peak-intensity feature, the centered partial
    dependence is evaluated at each row's actual value and summed; the delta
    is that aggregate minus the mean aggregate of the other directions, so a
    negative delta reads "fewer units than the other directions' average".
    Deltas sum to zero by construction.

    By default the curves come from ``X`` itself. Pass ``curves`` (usually
    from the unmodified training data) to hold the learned dependence fixed
    while reading it at hypothetical feature values, the way the hub
    experiment is scored.
    """
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ValueError("direction deltas need a non-empty dataset")
    indices = _direction_indices(feature_names, domain, len(direction_labels))
    if curves is None:
        curves = direction_curves(model, X, feature_names, domain, direction_labels)
    aggregates = []
    for label, idx in zip(direction_labels, indices):
        if label not in curves:
            raise ValueError(f"no dependence curve for direction {label!r}")
        aggregates.append(float(evaluate_curve(curves[label], X[:, idx]).sum()))
    deltas = {}
    for k, label in enumerate(direction_labels):
        others = [a for i, a in enumerate(aggregates) if i != k]
        deltas[label] = aggregates[k] - float(np.mean(others))
    return deltas
