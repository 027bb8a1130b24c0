"""Ingestion, persistence, and replay.

Bandit state snapshots are JSON documents that persist posterior counts as
integers on top of the fixed priors, so a restored or replayed state matches
the live one bit for bit. The event log is line-delimited JSON with strictly
increasing sequence numbers; a torn final line (an interrupted append) is
skipped with a warning and never corrupts the committed prefix.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .bandit import BanditState, apply_feedback, update_rankpct
from .features import ArcRecord

SNAPSHOT_VERSION = 1
LOG_VERSION = 1

ARC_CSV_HEADER = (
    "week",
    "origin_id",
    "dest_id",
    "packages",
    "cost_per_pkg",
    "direct",
    "origin_lat",
    "origin_lon",
    "dest_lat",
    "dest_lon",
)


class SchemaVersionError(ValueError):
    """A persisted document's version does not match this code."""


class MalformedRowError(ValueError):
    """A CSV row failed to parse; the message carries the line number."""


@dataclass(frozen=True)
class EventRecord:
    seq: int
    timestamp: str
    payload: dict


def ingest_arcs(path: str | Path) -> list[ArcRecord]:
    """Load the arc CSV; any malformed row aborts with its line number."""
    arcs: list[ArcRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ARC_CSV_HEADER:
            raise MalformedRowError(
                f"{path}: expected header {','.join(ARC_CSV_HEADER)!r}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ARC_CSV_HEADER):
                raise MalformedRowError(
                    f"{path}:{lineno}: expected {len(ARC_CSV_HEADER)} fields, got {len(row)}"
                )
            try:
                arcs.append(
                    ArcRecord(
                        week=int(row[0]),
                        origin_id=row[1],
                        dest_id=row[2],
                        flow=float(row[3]),
                        cost_per_pkg=float(row[4]),
                        direct=int(row[5]),
                        distance=float(
                            np.hypot(
                                float(row[6]) - float(row[8]),
                                float(row[7]) - float(row[9]),
                            )
                        ),
                        origin_lat=float(row[6]),
                        origin_lon=float(row[7]),
                        dest_lat=float(row[8]),
                        dest_lon=float(row[9]),
                    )
                )
            except ValueError as exc:
                raise MalformedRowError(f"{path}:{lineno}: {exc}") from exc
    return arcs


def write_arcs(arcs: Iterable[ArcRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ARC_CSV_HEADER)
        for arc in arcs:
            writer.writerow(
                [
                    arc.week,
                    arc.origin_id,
                    arc.dest_id,
                    repr(arc.flow),
                    repr(arc.cost_per_pkg),
                    arc.direct,
                    repr(arc.origin_lat),
                    repr(arc.origin_lon),
                    repr(arc.dest_lat),
                    repr(arc.dest_lon),
                ]
            )


def state_to_dict(state: BanditState) -> dict:
    """Snapshot document: derived alpha/beta for readers, counts for replay."""
    dests = []
    for j, dest_id in enumerate(state.dest_ids):
        arcs = []
        for i, origin_id in enumerate(state.origin_ids):
            arcs.append(
                {
                    "origin_id": origin_id,
                    "alpha": state.alpha(dest_id, origin_id),
                    "beta": state.beta(dest_id, origin_id),
                    "rankpct": float(state.rankpct[j, i]),
                    "alpha_count": int(state.alpha_count[j, i]),
                    "shown_count": int(state.shown_count[j, i]),
                    "penalty_count": int(state.penalty_count[j, i]),
                }
            )
        dests.append(
            {
                "dest_id": dest_id,
                "rounds_applied": int(state.rounds_applied[j]),
                "arcs": arcs,
            }
        )
    return {
        "version": SNAPSHOT_VERSION,
        "t": state.t,
        "alpha0": state.alpha0,
        "beta0": state.beta0,
        "dests": dests,
        "rankpct_defaulted": [list(pair) for pair in state.rankpct_defaulted],
    }


def state_from_dict(document: dict) -> BanditState:
    version = document.get("version")
    if version != SNAPSHOT_VERSION:
        raise SchemaVersionError(
            f"snapshot version {version!r} unsupported, expected {SNAPSHOT_VERSION}"
        )
    dests = document["dests"]
    dest_ids = tuple(d["dest_id"] for d in dests)
    origin_ids = tuple(arc["origin_id"] for arc in dests[0]["arcs"]) if dests else ()
    shape = (len(dest_ids), len(origin_ids))
    alpha_count = np.zeros(shape, dtype=np.int64)
    shown_count = np.zeros(shape, dtype=np.int64)
    penalty_count = np.zeros(shape, dtype=np.int64)
    rankpct = np.zeros(shape)
    rounds = np.zeros(len(dest_ids), dtype=np.int64)
    for j, dest in enumerate(dests):
        rounds[j] = dest["rounds_applied"]
        for i, arc in enumerate(dest["arcs"]):
            if arc["origin_id"] != origin_ids[i]:
                raise ValueError("snapshot arcs are not aligned across destinations")
            alpha_count[j, i] = arc["alpha_count"]
            shown_count[j, i] = arc["shown_count"]
            penalty_count[j, i] = arc["penalty_count"]
            rankpct[j, i] = arc["rankpct"]
    return BanditState(
        origin_ids=origin_ids,
        dest_ids=dest_ids,
        alpha0=float(document["alpha0"]),
        beta0=float(document["beta0"]),
        alpha_count=alpha_count,
        shown_count=shown_count,
        penalty_count=penalty_count,
        rankpct=rankpct,
        rounds_applied=rounds,
        t=int(document["t"]),
        rankpct_defaulted=tuple(
            (d, o) for d, o in document.get("rankpct_defaulted", [])
        ),
    )


def snapshot(state: BanditState, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_dict(state), fh)
        fh.write("\n")


def restore(path: str | Path) -> BanditState:
    with open(path, encoding="utf-8") as fh:
        return state_from_dict(json.load(fh))


def state_hash(state: BanditState) -> str:
    """Stable fingerprint of the full posterior grid."""
    canonical = json.dumps(state_to_dict(state), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class EventLog:
    """Append-only JSON-lines log with fsync-before-acknowledge appends."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._next_seq = 1
        if self.path.exists():
            events = read_events(self.path)
            if events:
                self._next_seq = events[-1].seq + 1

    def append(self, payload: dict) -> EventRecord:
        record = EventRecord(
            seq=self._next_seq,
            timestamp=datetime.now(timezone.utc).isoformat(),
            payload=payload,
        )
        line = json.dumps(
            {"seq": record.seq, "ts": record.timestamp, "payload": record.payload}
        )
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._next_seq += 1
        return record

    def events(self) -> list[EventRecord]:
        return read_events(self.path)


def read_events(path: str | Path) -> list[EventRecord]:
    """Read committed events; a torn final line is dropped with a warning."""
    path = Path(path)
    if not path.exists():
        return []
    raw_lines = path.read_text(encoding="utf-8").split("\n")
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()
    events: list[EventRecord] = []
    last_seq = 0
    for idx, line in enumerate(raw_lines):
        try:
            doc = json.loads(line)
            record = EventRecord(int(doc["seq"]), str(doc["ts"]), dict(doc["payload"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if idx == len(raw_lines) - 1:
                warnings.warn(
                    f"{path}: dropping torn final event line ({exc})", stacklevel=2
                )
                break
            raise ValueError(f"{path}: corrupt event at line {idx + 1}: {exc}") from exc
        if record.seq <= last_seq:
            raise ValueError(
                f"{path}: sequence regressed at line {idx + 1} ({record.seq} after {last_seq})"
            )
        last_seq = record.seq
        events.append(record)
    return events


def feedback_event(
    dest_id: str,
    t: int,
    recommended: Iterable[str],
    selected: Iterable[str],
    mode: str,
    seed: int,
) -> dict:
    return {
        "type": "feedback",
        "dest_id": dest_id,
        "t": t,
        "recommended": list(recommended),
        "selected": list(selected),
        "mode": mode,
        "seed": seed,
    }


def rank_refresh_event(dest_id: str, rankpct: dict[str, float]) -> dict:
    return {"type": "rank_refresh", "dest_id": dest_id, "rankpct": dict(rankpct)}


def snapshot_marker_event(path: str) -> dict:
    return {"type": "snapshot", "path": path}


def replay(initial: BanditState, events: Iterable[EventRecord | dict]) -> BanditState:
    """Re-apply a committed event sequence to a copy of the initial state."""
    state = state_from_dict(state_to_dict(initial))
    for event in events:
        payload = event.payload if isinstance(event, EventRecord) else event
        kind = payload.get("type")
        if kind == "feedback":
            apply_feedback(
                state,
                payload["dest_id"],
                payload["recommended"],
                payload["selected"],
                mode=payload["mode"],
                t=payload["t"],
            )
        elif kind == "rank_refresh":
            update_rankpct(state, payload["dest_id"], payload["rankpct"])
        elif kind == "snapshot":
            continue
        else:
            raise ValueError(f"unknown event type {kind!r}")
    return state
