import json

import numpy as np
import pytest

from lanesig.bandit import apply_feedback, init_state, sample_round
from lanesig.store import (
    EventLog,
    MalformedRowError,
    SchemaVersionError,
    feedback_event,
    ingest_arcs,
    rank_refresh_event,
    read_events,
    replay,
    restore,
    snapshot,
    state_hash,
    state_to_dict,
    write_arcs,
)

from helpers import make_arcs


class TestArcCsv:
    def test_round_trip(self, tmp_path):
        arcs = make_arcs(n_fc=3, n_dest=4, seed=1)
        path = tmp_path / "arcs.csv"
        write_arcs(arcs, path)
        loaded = ingest_arcs(path)
        assert len(loaded) == len(arcs)
        for a, b in zip(arcs, loaded):
            assert (a.week, a.origin_id, a.dest_id) == (b.week, b.origin_id, b.dest_id)
            assert a.flow == b.flow
            assert a.cost_per_pkg == b.cost_per_pkg
            assert a.distance == pytest.approx(b.distance, abs=1e-12)

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "arcs.csv"
        path.write_text("week,origin,dest\n")
        with pytest.raises(MalformedRowError, match="header"):
            ingest_arcs(path)

    def test_malformed_row_line_number(self, tmp_path):
        arcs = make_arcs(n_fc=1, n_dest=1)
        path = tmp_path / "arcs.csv"
        write_arcs(arcs, path)
        with open(path, "a") as fh:
            fh.write("0,FC_0,D_0,notanumber,1.0,0,40,-100,41,-99\n")
        with pytest.raises(MalformedRowError, match=":3"):
            ingest_arcs(path)


def random_rounds(state, n_rounds, seed, log=None, mode="not_selected"):
    """Drive the bandit with random feedback, optionally logging events."""
    rng = np.random.default_rng(seed)
    for k in range(n_rounds):
        dest = state.dest_ids[int(rng.integers(0, state.n_dest))]
        rnd = sample_round(state, dest, k % state.n_fc + 1, seed=1000 + k)
        n_sel = int(rng.integers(0, len(rnd.recommended) + 1))
        selected = list(rng.choice(rnd.recommended, size=n_sel, replace=False))
        apply_feedback(state, dest, rnd.recommended, selected, mode=mode, t=rnd.t)
        if log is not None:
            log.append(
                feedback_event(dest, rnd.t, rnd.recommended, selected, mode, rnd.seed)
            )


class TestSnapshot:
    def test_round_trip_identical(self, tmp_path):
        state = init_state(6, 4)
        random_rounds(state, 25, seed=0)
        path = tmp_path / "state.json"
        snapshot(state, path)
        loaded = restore(path)
        assert state_hash(loaded) == state_hash(state)
        assert np.array_equal(loaded.alpha_count, state.alpha_count)
        assert np.array_equal(loaded.shown_count, state.shown_count)
        assert np.array_equal(loaded.rankpct, state.rankpct)
        assert np.array_equal(loaded.rounds_applied, state.rounds_applied)
        assert loaded.t == state.t
        assert loaded.origin_ids == state.origin_ids

    def test_snapshot_carries_spec_fields(self, tmp_path):
        state = init_state(2, 1)
        doc = state_to_dict(state)
        assert doc["version"] == 1
        arc = doc["dests"][0]["arcs"][0]
        assert set(arc) >= {"origin_id", "alpha", "beta", "rankpct"}
        assert arc["alpha"] == 0.1
        assert arc["beta"] == 1.0

    def test_version_mismatch(self, tmp_path):
        state = init_state(2, 1)
        path = tmp_path / "state.json"
        snapshot(state, path)
        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaVersionError):
            restore(path)


class TestEventLog:
    def test_replay_empty_log_is_initial(self, tmp_path):
        state = init_state(4, 2)
        log = EventLog(tmp_path / "events.jsonl")
        replayed = replay(state, log.events())
        assert state_hash(replayed) == state_hash(state)

    def test_replay_matches_live_state(self, tmp_path):
        live = init_state(6, 3)
        base = init_state(6, 3)
        log = EventLog(tmp_path / "events.jsonl")
        random_rounds(live, 50, seed=7, log=log)
        replayed = replay(base, log.events())
        assert state_hash(replayed) == state_hash(live)
        assert np.array_equal(replayed.alpha_count, live.alpha_count)
        assert np.array_equal(replayed.shown_count, live.shown_count)

    def test_replay_with_rank_refresh(self, tmp_path):
        live = init_state(3, 1)
        base = init_state(3, 1)
        log = EventLog(tmp_path / "events.jsonl")
        from lanesig.bandit import update_rankpct

        update_rankpct(live, "D_0", {"FC_0": 0.9})
        log.append(rank_refresh_event("D_0", {"FC_0": 0.9}))
        random_rounds(live, 5, seed=2, log=log)
        replayed = replay(base, log.events())
        assert state_hash(replayed) == state_hash(live)

    def test_sequence_strictly_increasing(self, tmp_path):
        log = EventLog(tmp_path / "events.jsonl")
        first = log.append({"type": "snapshot", "path": "x"})
        second = log.append({"type": "snapshot", "path": "y"})
        assert second.seq == first.seq + 1
        reopened = EventLog(tmp_path / "events.jsonl")
        third = reopened.append({"type": "snapshot", "path": "z"})
        assert third.seq == second.seq + 1

    def test_torn_tail_ignored_with_warning(self, tmp_path):
        path = tmp_path / "events.jsonl"
        log = EventLog(path)
        log.append({"type": "snapshot", "path": "a"})
        log.append({"type": "snapshot", "path": "b"})
        with open(path, "a") as fh:
            fh.write('{"seq": 3, "ts": "t", "payload": {"type": "snap')  # torn write
        with pytest.warns(UserWarning, match="torn"):
            events = read_events(path)
        assert [e.seq for e in events] == [1, 2]

    def test_mid_file_corruption_rejected(self, tmp_path):
        path = tmp_path / "events.jsonl"
        log = EventLog(path)
        log.append({"type": "snapshot", "path": "a"})
        content = path.read_text()
        path.write_text("garbage\n" + content)
        with pytest.raises(ValueError, match="corrupt"):
            read_events(path)

    def test_sequence_regression_rejected(self, tmp_path):
        path = tmp_path / "events.jsonl"
        lines = [
            json.dumps({"seq": 2, "ts": "t", "payload": {"type": "snapshot", "path": "a"}}),
            json.dumps({"seq": 1, "ts": "t", "payload": {"type": "snapshot", "path": "b"}}),
            json.dumps({"seq": 3, "ts": "t", "payload": {"type": "snapshot", "path": "c"}}),
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="regressed"):
            read_events(path)

    def test_unknown_event_type_rejected(self, tmp_path):
        state = init_state(2, 1)
        with pytest.raises(ValueError, match="unknown event type"):
            replay(state, [{"type": "mystery"}])


class TestStateHash:
    def test_sensitive_to_updates(self):
        a = init_state(3, 2)
        b = init_state(3, 2)
        assert state_hash(a) == state_hash(b)
        apply_feedback(b, "D_0", ("FC_0",), ("FC_0",))
        assert state_hash(a) != state_hash(b)
