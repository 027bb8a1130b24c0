"""Small synthetic fixtures shared across test modules."""

from __future__ import annotations

import numpy as np

from lanesig.features import ArcRecord
from lanesig.geometry import PolarGrid


def small_grid() -> PolarGrid:
    return PolarGrid(theta_bins=4, r_bins=10, r_step=1.0, r_unit="degrees")


def make_arcs(
    n_fc: int = 4,
    n_dest: int = 6,
    weeks: int = 1,
    seed: int = 0,
    start_week: int = 0,
) -> list[ArcRecord]:
    """Full bipartite arc set with smooth distance-driven flows and costs."""
    rng = np.random.default_rng(seed)
    fc_pos = [(rng.uniform(30, 45), rng.uniform(-120, -80)) for _ in range(n_fc)]
    dest_pos = [(rng.uniform(28, 47), rng.uniform(-122, -75)) for _ in range(n_dest)]
    arcs = []
    for week in range(start_week, start_week + weeks):
        for i, (flat, flon) in enumerate(fc_pos):
            for j, (dlat, dlon) in enumerate(dest_pos):
                distance = float(np.hypot(flat - dlat, flon - dlon))
                flow = float(np.round(200.0 * np.exp(-distance / 10.0) + rng.uniform(0, 5), 3))
                cost = float(1.0 + 0.15 * distance + rng.uniform(0, 0.2))
                arcs.append(
                    ArcRecord(
                        week=week,
                        origin_id=f"FC_{i}",
                        dest_id=f"D_{j}",
                        flow=flow,
                        cost_per_pkg=cost,
                        distance=distance,
                        direct=int(rng.integers(0, 2)),
                        origin_lat=flat,
                        origin_lon=flon,
                        dest_lat=dlat,
                        dest_lon=dlon,
                    )
                )
    return arcs
