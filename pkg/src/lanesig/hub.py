"""Hypothetical-hub data surgery on a fitted feature dataset.

The experiment rewrites a slice of test rows as if a new transfer hub had
been placed: origins southwest of the hub point their southwest peak at the
hub's ring, draw a peak intensity and lane distance from configured
Gaussians, and take dataset means everywhere else. Re-reading the model's
partial dependence on the modified rows then shows how the learned network
responds to that activity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .features import FlowDataset
from .geometry import GeoNode

SW_DIRECTION = 2  # quadrant order NE, NW, SW, SE


@dataclass(frozen=True)
class HubConfig:
    """Generator settings; None means derive from the dataset.

    Standard deviations default to 10% of the matching mean.
    """

    max_mean: float = 800.0
    max_sd: float | None = None
    distance_mean: float | None = None
    distance_sd: float | None = None
    seed: int = 0


@dataclass(frozen=True)
class HubResult:
    dataset: FlowDataset
    modified_rows: tuple[int, ...]
    truncated: bool


def segments_to_hub(origin_lat: float, origin_lon: float, hub: GeoNode, dataset: FlowDataset) -> int:
    """Ring count between an origin and the hub under the dataset's grid."""
    grid = dataset.grid
    r_deg = math.hypot(origin_lat - hub.lat, origin_lon - hub.lon)
    return int(grid.radius_from_degrees(r_deg) // grid.r_step)


def hub_experiment(
    dataset: FlowDataset,
    hub: GeoNode,
    fraction: float,
    cfg: HubConfig = HubConfig(),
) -> HubResult:
    """Rewrite ``floor(fraction * len(dataset))`` rows to reflect a new hub.

    Eligible rows are those whose origin lies strictly southwest of the hub
    (smaller latitude and longitude). If the quota exceeds the eligible rows,
    every eligible row is rewritten and the result is flagged truncated.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if dataset.variant != "d":
        raise ValueError(f"hub experiment needs a 'd' dataset, got {dataset.variant!r}")
    names = dataset.feature_names
    sw_max = names.index(f"oD_{SW_DIRECTION}r_summary_max")
    sw_max_r = names.index(f"oD_{SW_DIRECTION}r_summary_max_r")
    ln_lld = names.index("ln_lld")

    quota = int(fraction * len(dataset))
    if quota == 0:
        return HubResult(dataset, (), False)

    eligible = [
        i
        for i, arc in enumerate(dataset.arcs)
        if arc.origin_lat < hub.lat and arc.origin_lon < hub.lon
    ]
    truncated = quota > len(eligible)
    rng = np.random.default_rng(cfg.seed)
    if truncated:
        chosen = np.asarray(eligible, dtype=int)
    else:
        chosen = np.sort(rng.choice(np.asarray(eligible, dtype=int), size=quota, replace=False))

    max_sd = cfg.max_sd if cfg.max_sd is not None else 0.1 * cfg.max_mean
    distance_mean = (
        cfg.distance_mean
        if cfg.distance_mean is not None
        else float(np.mean([arc.distance for arc in dataset.arcs]))
    )
    distance_sd = cfg.distance_sd if cfg.distance_sd is not None else 0.1 * distance_mean

    column_means = dataset.X.mean(axis=0)
    X = dataset.X.copy()
    for i in chosen:
        arc = dataset.arcs[i]
        row = column_means.copy()
        row[sw_max_r] = float(segments_to_hub(arc.origin_lat, arc.origin_lon, hub, dataset))
        row[sw_max] = rng.normal(cfg.max_mean, max_sd)
        distance = max(rng.normal(distance_mean, distance_sd), 1e-9)
        row[ln_lld] = math.log(distance)
        X[i] = row
    modified = replace(dataset, X=X)
    return HubResult(modified, tuple(int(i) for i in chosen), truncated)
