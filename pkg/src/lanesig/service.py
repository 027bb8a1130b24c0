"""HTTP/JSON API for operator consoles and scripts.

All endpoints live under ``/v1``. One recommendation round may be pending per
destination: a round is created by GET recommendations, acknowledged by POST
selections, and a second GET with different parameters meanwhile answers 409.
Re-reading the pending round with the same seed (and k) returns the identical
body. Every acknowledged mutation is appended to the event log, flushed and
fsynced, before the response goes out.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .bandit import (
    BanditState,
    RecommendationRound,
    apply_feedback,
    expected_arcs,
    init_state,
    sample_round,
)
from .dependence import direction_curves, direction_flow_delta
from .features import (
    ArcRecord,
    FlowDataset,
    SignatureTable,
    build_design,
    build_features,
    build_signature_tables,
    node_sets_from_arcs,
)
from .geometry import GeoNode, NodeSet, PolarGrid
from .hub import HubConfig, hub_experiment
from .ranking import RankingTable, predict_costs, rank_all
from .regression import GradientBoostedRegressor
from .simulate import whatif_new_arc
from .store import EventLog, feedback_event, state_to_dict


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


@dataclass
class SessionConfig:
    feedback_mode: str = "not_selected"
    default_k: int | None = None  # None: use the expected-count rule
    api_token: str | None = None
    whatif_episodes: int = 20
    whatif_weeks: int = 3


@dataclass
class PendingRound:
    round: RecommendationRound
    body: dict


@dataclass
class HistoryEntry:
    t: int
    seed: int
    k: int
    bootstrap: bool
    recommended: tuple[str, ...]
    selected: tuple[str, ...]
    arcs: dict[str, dict[str, float]]  # origin -> rankpct / posterior_mean / theta_tilde


@dataclass
class ApiSession:
    """Everything one service instance needs, wired together."""

    state: BanditState
    rank_tables: dict[str, RankingTable]
    arcs: tuple[ArcRecord, ...]
    tables: dict[str, SignatureTable]
    fc_set: NodeSet
    dest_set: NodeSet
    grid: PolarGrid
    flow_model: Any
    flow_dataset: FlowDataset
    cost_model: Any
    log: EventLog
    config: SessionConfig = field(default_factory=SessionConfig)
    pending: dict[str, PendingRound] = field(default_factory=dict)
    history: dict[str, list[HistoryEntry]] = field(default_factory=dict)
    _locks: dict[str, threading.Lock] = field(default_factory=dict)
    _direction_curves: dict | None = None
    _baseline_deltas: dict[str, float] | None = None

    def lock_for(self, dest_id: str) -> threading.Lock:
        return self._locks.setdefault(dest_id, threading.Lock())

    def latest_week(self) -> int:
        return max(a.week for a in self.arcs)

    def arcs_for_dest(self, dest_id: str) -> list[ArcRecord]:
        week = self.latest_week()
        return [a for a in self.arcs if a.dest_id == dest_id and a.week == week]

    def baseline_curves(self) -> dict:
        # learned dependence, frozen on the historical data
        if self._direction_curves is None:
            self._direction_curves = direction_curves(
                self.flow_model, self.flow_dataset.X, self.flow_dataset.feature_names
            )
        return self._direction_curves

    def baseline_deltas(self) -> dict[str, float]:
        if self._baseline_deltas is None:
            self._baseline_deltas = direction_flow_delta(
                self.flow_model,
                self.flow_dataset.X,
                self.flow_dataset.feature_names,
                curves=self.baseline_curves(),
            )
        return self._baseline_deltas


def build_session(
    arcs: list[ArcRecord],
    log_path: str,
    grid: PolarGrid | None = None,
    state: BanditState | None = None,
    cost_model: Any = None,
    flow_model: Any = None,
    config: SessionConfig | None = None,
    flow_iterations: int = 150,
    cost_iterations: int = 100,
    seed: int = 0,
) -> ApiSession:
    """Assemble a session from arc history, fitting any model not supplied."""
    if not arcs:
        raise ValueError("need at least one arc")
    grid = grid or PolarGrid()
    config = config or SessionConfig()
    fc_set, dest_set = node_sets_from_arcs(arcs)
    tables = build_signature_tables(fc_set, dest_set, grid)

    cost_dataset = build_design(arcs, tables, "cost", grid, target="cost")
    if cost_model is None:
        cost_model = GradientBoostedRegressor(
            n_iterations=cost_iterations, max_depth=3
        ).fit(cost_dataset.X, cost_dataset.y)
    flow_dataset = build_design(arcs, tables, "d", grid, target="flow")
    if flow_model is None:
        flow_model = GradientBoostedRegressor(
            n_iterations=flow_iterations, max_depth=3
        ).fit(flow_dataset.X, flow_dataset.y)

    week = max(a.week for a in arcs)
    latest = [a for a in arcs if a.week == week]
    predictions = predict_costs(cost_model, latest, tables)
    rank_tables = rank_all(predictions, week=week)
    if state is None:
        rankpct: dict[tuple[str, str], float] = {}
        for dest_id, table in rank_tables.items():
            for origin_id, pct in table.rankpct_map().items():
                rankpct[(dest_id, origin_id)] = pct
        state = init_state(
            [n.id for n in fc_set],
            [n.id for n in dest_set],
            rankpct=rankpct,
        )
    return ApiSession(
        state=state,
        rank_tables=rank_tables,
        arcs=tuple(arcs),
        tables=tables,
        fc_set=fc_set,
        dest_set=dest_set,
        grid=grid,
        flow_model=flow_model,
        flow_dataset=flow_dataset,
        cost_model=cost_model,
        log=EventLog(log_path),
        config=config,
    )


class SelectionsBody(BaseModel):
    round_t: int
    selected: list[str]


class WhatIfHubBody(BaseModel):
    lat: float
    lon: float
    fraction: float
    seed: int = 0
    max_mean: float = 800.0
    dest_id: str | None = None


def _round_body(session: ApiSession, rnd: RecommendationRound) -> dict:
    state = session.state
    dest_id = rnd.dest_id
    table = session.rank_tables.get(dest_id)
    means = state.posterior_mean_row(dest_id)
    pct = state.rankpct_row(dest_id)
    distance = {
        a.origin_id: a.distance for a in session.arcs_for_dest(dest_id)
    }
    order = {oid: i for i, oid in enumerate(state.origin_ids)}
    arcs = []
    for origin_id in rnd.recommended:
        i = order[origin_id]
        arcs.append(
            {
                "origin_id": origin_id,
                "theta_hat": None if rnd.sampled is None else rnd.sampled[i],
                "theta_tilde": rnd.adjusted[i],
                "rankpct": float(pct[i]),
                "posterior_mean": float(means[i]),
                "distance": distance.get(origin_id),
                "predicted_cost": table.costs.get(origin_id) if table else None,
            }
        )
    return {
        "dest_id": dest_id,
        "t": rnd.t,
        "k": rnd.k,
        "seed": rnd.seed,
        "bootstrap": rnd.bootstrap,
        "mode": session.config.feedback_mode,
        "arcs": arcs,
    }


def create_app(session: ApiSession) -> FastAPI:
    app = FastAPI(title="lanesig", version="1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status_code,
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "invalid_request", "message": str(exc.errors())},
        )

    async def require_token(x_api_token: str | None = Header(default=None)):
        expected = session.config.api_token
        if expected is not None and x_api_token != expected:
            raise ApiError(401, "unauthorized", "missing or invalid API token")

    guarded = [Depends(require_token)]

    def known_dest(dest_id: str) -> None:
        if dest_id not in session.state._dest_index:
            raise ApiError(404, "unknown_destination", f"no destination {dest_id!r}")

    @app.get("/v1/destinations/{dest_id}/recommendations", dependencies=guarded)
    def recommendations(dest_id: str, k: int | None = None, seed: int | None = None):
        known_dest(dest_id)
        with session.lock_for(dest_id):
            pending = session.pending.get(dest_id)
            if pending is not None:
                same_request = (
                    seed is not None
                    and seed == pending.round.seed
                    and (k is None or k == pending.round.k)
                )
                if same_request:
                    return pending.body
                raise ApiError(
                    409,
                    "pending_round",
                    f"round {pending.round.t} for {dest_id!r} awaits selections",
                )
            if seed is None:
                seed = int.from_bytes(os.urandom(4), "big")
            if k is None:
                k = session.config.default_k or expected_arcs(
                    session.state, dest_id
                ).k_suggested
            if not (1 <= k <= session.state.n_fc):
                raise ApiError(400, "invalid_k", f"k must be in [1, {session.state.n_fc}]")
            rnd = sample_round(session.state, dest_id, k, seed=seed)
            body = _round_body(session, rnd)
            session.pending[dest_id] = PendingRound(rnd, body)
            return body

    @app.post("/v1/destinations/{dest_id}/selections", dependencies=guarded)
    def selections(dest_id: str, body: SelectionsBody):
        known_dest(dest_id)
        with session.lock_for(dest_id):
            pending = session.pending.get(dest_id)
            if pending is None or body.round_t != pending.round.t:
                raise ApiError(
                    409,
                    "stale_round",
                    f"no pending round {body.round_t} for {dest_id!r}",
                )
            unknown = [o for o in body.selected if o not in session.state._origin_index]
            if unknown:
                raise ApiError(400, "unknown_origin", f"unknown origin ids {unknown}")
            rnd = pending.round
            # durable first: the log line is the authoritative record
            session.log.append(
                feedback_event(
                    dest_id,
                    rnd.t,
                    rnd.recommended,
                    body.selected,
                    session.config.feedback_mode,
                    rnd.seed,
                )
            )
            deltas = apply_feedback(
                session.state,
                dest_id,
                rnd.recommended,
                body.selected,
                mode=session.config.feedback_mode,
                t=rnd.t,
            )
            means = session.state.posterior_mean_row(dest_id)
            pct = session.state.rankpct_row(dest_id)
            entry = HistoryEntry(
                t=rnd.t,
                seed=rnd.seed,
                k=rnd.k,
                bootstrap=rnd.bootstrap,
                recommended=rnd.recommended,
                selected=tuple(body.selected),
                arcs={
                    origin_id: {
                        "rankpct": float(pct[i]),
                        "posterior_mean": float(means[i]),
                        "theta_tilde": float(rnd.adjusted[i]),
                    }
                    for i, origin_id in enumerate(session.state.origin_ids)
                },
            )
            session.history.setdefault(dest_id, []).append(entry)
            del session.pending[dest_id]
            updates = [
                {
                    "origin_id": origin_id,
                    "delta_alpha": d_alpha,
                    "delta_beta": d_beta,
                    "alpha": session.state.alpha(dest_id, origin_id),
                    "beta": session.state.beta(dest_id, origin_id),
                }
                for origin_id, (d_alpha, d_beta) in sorted(deltas.items())
            ]
            return {
                "dest_id": dest_id,
                "t": rnd.t,
                "mode": session.config.feedback_mode,
                "updates": updates,
            }

    @app.get("/v1/state", dependencies=guarded)
    def state_view():
        return state_to_dict(session.state)

    @app.get("/v1/nodes", dependencies=guarded)
    def nodes_view():
        return {
            "nodes": [
                {"id": n.id, "lat": n.lat, "lon": n.lon, "kind": "origin"}
                for n in session.fc_set
            ]
            + [
                {"id": n.id, "lat": n.lat, "lon": n.lon, "kind": "destination"}
                for n in session.dest_set
            ]
        }

    @app.get("/v1/nodes/{node_id}/geosig", dependencies=guarded)
    def node_geosig(node_id: str):
        try:
            node = session.fc_set.get(node_id)
            domain = "oD"
        except KeyError:
            try:
                node = session.dest_set.get(node_id)
                domain = "dD"
            except KeyError:
                raise ApiError(404, "unknown_node", f"no node {node_id!r}") from None
        sig = session.tables[domain].signatures[node.id]
        return {
            "id": node.id,
            "domain": domain,
            "pairs": [[value, rbin] for value, rbin in sig.pairs],
            "flat": sig.flat.tolist(),
        }

    @app.get("/v1/destinations/{dest_id}/history", dependencies=guarded)
    def history(dest_id: str):
        known_dest(dest_id)
        entries = session.history.get(dest_id, [])
        series: dict[str, list[dict]] = {o: [] for o in session.state.origin_ids}
        for entry in entries:
            for origin_id, values in entry.arcs.items():
                series[origin_id].append({"t": entry.t, **values})
        return {
            "dest_id": dest_id,
            "rounds": [
                {
                    "t": e.t,
                    "seed": e.seed,
                    "k": e.k,
                    "bootstrap": e.bootstrap,
                    "recommended": list(e.recommended),
                    "selected": list(e.selected),
                }
                for e in entries
            ],
            "series": series,
        }

    @app.post("/v1/whatif/hub", dependencies=guarded)
    def whatif_hub(body: WhatIfHubBody):
        if not (0.0 <= body.fraction <= 1.0):
            raise ApiError(400, "invalid_fraction", "fraction must be in [0, 1]")
        hub = GeoNode("HUB", body.lat, body.lon, 0.0)
        result = hub_experiment(
            session.flow_dataset,
            hub,
            body.fraction,
            HubConfig(max_mean=body.max_mean, seed=body.seed),
        )
        hub_deltas = direction_flow_delta(
            session.flow_model,
            result.dataset.X,
            result.dataset.feature_names,
            curves=session.baseline_curves(),
        )
        dest_id = body.dest_id or session.state.dest_ids[0]
        known_dest(dest_id)
        dest_arcs = session.arcs_for_dest(dest_id)
        existing = {
            a.origin_id: build_features(a, session.tables, "cost").values
            for a in dest_arcs
        }
        if not existing:
            raise ApiError(400, "no_arcs", f"no arcs into {dest_id!r} to compare against")
        # hypothetical lane: average arc into this destination, relocated to the hub
        new_features = np.mean(np.vstack(list(existing.values())), axis=0)
        names = list(build_features(dest_arcs[0], session.tables, "cost").names)
        dest_node = session.dest_set.get(dest_id)
        hub_distance = float(np.hypot(hub.lat - dest_node.lat, hub.lon - dest_node.lon))
        new_features[names.index("distance")] = hub_distance
        new_features[names.index("lat")] = hub.lat
        new_features[names.index("lon")] = hub.lon
        predicted = max(float(session.cost_model.predict(new_features.reshape(1, -1))[0]), 0.0)
        table = session.rank_tables[dest_id]
        costs = dict(table.costs)
        costs["HUB"] = predicted
        from .ranking import rank_arcs

        new_table = rank_arcs(costs, dest_id, table.week)
        report = whatif_new_arc(
            session.state,
            dest_id,
            "HUB",
            new_features,
            existing,
            new_rankpct=new_table.rankpct("HUB"),
            episodes=session.config.whatif_episodes,
            weeks=session.config.whatif_weeks,
            k=None,
            operator_selects=(),
            seed=body.seed,
        )
        return {
            "fraction": body.fraction,
            "modified_rows": len(result.modified_rows),
            "truncated": result.truncated,
            "baseline_deltas": session.baseline_deltas(),
            "hub_deltas": hub_deltas,
            "proximity": {
                "new_origin_id": report.new_origin_id,
                "dest_id": report.dest_id,
                "copied_from": report.copied_from,
                "initial_alpha": report.initial_alpha,
                "initial_beta": report.initial_beta,
                "rankpct": report.rankpct,
                "predicted_cost": predicted,
                "episodes": report.episodes,
                "best_positions": list(report.best_positions),
                "inclusion_frequency": report.inclusion_frequency,
            },
        }

    return app
