"""Per-destination lane rankings from predicted arc costs.

Origins are sorted by predicted cost per package, cheapest first; each gets a
0-based rank and a rank percentile ``1 - (rank + 1) / n_fc`` that later acts
as a prior weight on recommendation sampling. Display helpers use 1-based
ranks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .features import ArcRecord, MissingSignatureError, SignatureTable, build_features


@dataclass(frozen=True)
class CostPredictions:
    """Predicted cost per package for a batch of arcs."""

    costs: dict[tuple[str, str], float]
    clamped: tuple[tuple[str, str], ...]  # arcs whose raw prediction was negative


@dataclass(frozen=True)
class RankingTable:
    """Ascending-cost ordering of origins for one destination and week."""

    dest_id: str
    week: int
    origins: tuple[str, ...]
    costs: dict[str, float]

    @property
    def n_fc(self) -> int:
        return len(self.origins)

    def rank(self, origin_id: str) -> int:
        try:
            return self.origins.index(origin_id)
        except ValueError:
            raise KeyError(origin_id) from None

    def display_rank(self, origin_id: str) -> int:
        return self.rank(origin_id) + 1

    def rankpct(self, origin_id: str) -> float:
        return rank_percentile(self.rank(origin_id), self.n_fc)

    def rankpct_map(self) -> dict[str, float]:
        return {origin: rank_percentile(k, self.n_fc) for k, origin in enumerate(self.origins)}


def rank_percentile(rank: int, n_fc: int) -> float:
    """Prior weight in [0, 1): best rank maps highest, worst maps to zero."""
    if not (0 <= rank < n_fc):
        raise ValueError(f"rank {rank} outside [0, {n_fc})")
    return 1.0 - (rank + 1) / n_fc


def predict_costs(
    model,
    arcs: Iterable[ArcRecord],
    tables: dict[str, SignatureTable],
) -> CostPredictions:
    """Predict per-arc cost with a cost-layout model; negatives clamp to zero."""
    costs: dict[tuple[str, str], float] = {}
    clamped: list[tuple[str, str]] = []
    for arc in arcs:
        key = (arc.origin_id, arc.dest_id)
        try:
            features = build_features(arc, tables, "cost")
        except MissingSignatureError as exc:
            raise MissingSignatureError(
                f"arc {arc.origin_id}->{arc.dest_id}: {exc.args[0]}"
            ) from exc
        value = float(model.predict(features.values.reshape(1, -1))[0])
        if value < 0.0:
            clamped.append(key)
            value = 0.0
        costs[key] = value
    return CostPredictions(costs, tuple(clamped))


def rank_arcs(
    costs: Mapping[str, float] | Iterable[tuple[str, float]],
    dest_id: str,
    week: int = 0,
) -> RankingTable:
    """Stable ascending sort by cost, ties broken by origin id."""
    if isinstance(costs, Mapping):
        pairs = list(costs.items())
    else:
        pairs = list(costs)
        seen = [origin for origin, _ in pairs]
        if len(seen) != len(set(seen)):
            raise ValueError(f"duplicate origin ids in cost table for {dest_id!r}")
    if not pairs:
        raise ValueError(f"no origins to rank for {dest_id!r}")
    ordered = sorted(pairs, key=lambda it: (it[1], it[0]))
    return RankingTable(
        dest_id=dest_id,
        week=week,
        origins=tuple(origin for origin, _ in ordered),
        costs={origin: float(cost) for origin, cost in pairs},
    )


def rank_all(
    predictions: CostPredictions, week: int = 0
) -> dict[str, RankingTable]:
    """Group predictions by destination and rank each one."""
    by_dest: dict[str, dict[str, float]] = {}
    for (origin, dest), cost in predictions.costs.items():
        by_dest.setdefault(dest, {})[origin] = cost
    return {
        dest: rank_arcs(costs, dest, week) for dest, costs in sorted(by_dest.items())
    }


RANKING_CSV_HEADER = ("dest_id", "week", "rank", "origin_id", "predicted_cost", "rankpct")


def write_ranking_csv(tables: Iterable[RankingTable], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RANKING_CSV_HEADER)
        for table in tables:
            for rank, origin in enumerate(table.origins):
                writer.writerow(
                    [
                        table.dest_id,
                        table.week,
                        rank,
                        origin,
                        repr(table.costs[origin]),
                        repr(rank_percentile(rank, table.n_fc)),
                    ]
                )
