import numpy as np
import pytest

from lanesig.features import build_signature_tables, node_sets_from_arcs
from lanesig.ranking import (
    predict_costs,
    rank_all,
    rank_arcs,
    rank_percentile,
    write_ranking_csv,
)
from lanesig.regression import GradientBoostedRegressor, LinearFlowRegressor

from helpers import make_arcs, small_grid


class TestRankPercentile:
    def test_best_of_71(self):
        assert rank_percentile(0, 71) == pytest.approx(70 / 71)
        assert rank_percentile(0, 71) == pytest.approx(0.98592, abs=5e-6)

    def test_worst_of_71(self):
        assert rank_percentile(70, 71) == 0.0

    def test_midpoint(self):
        assert rank_percentile(4, 10) == pytest.approx(0.5)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            rank_percentile(10, 10)
        with pytest.raises(ValueError):
            rank_percentile(-1, 10)


class TestRankArcs:
    def test_basic_ordering(self):
        table = rank_arcs({"A": 0.5, "B": 1.2, "C": 0.9}, "D_0", week=3)
        assert table.origins == ("A", "C", "B")
        assert table.rank("A") == 0
        assert table.rank("C") == 1
        assert table.rank("B") == 2
        assert table.display_rank("A") == 1

    def test_ties_break_by_origin_id(self):
        table = rank_arcs({"Z": 1.0, "A": 1.0, "M": 1.0}, "D_0")
        assert table.origins == ("A", "M", "Z")

    def test_matches_argsort_oracle(self):
        rng = np.random.default_rng(0)
        costs = {f"FC_{i:02d}": float(c) for i, c in enumerate(rng.uniform(0, 10, size=71))}
        table = rank_arcs(costs, "D_0")
        ids = sorted(costs)
        order = np.argsort([costs[i] for i in ids], kind="stable")
        expected = tuple(ids[k] for k in order)
        assert table.origins == expected
        assert sorted(table.rank(o) for o in table.origins) == list(range(71))

    def test_mean_rankpct_exact(self):
        rng = np.random.default_rng(1)
        costs = {f"FC_{i}": float(c) for i, c in enumerate(rng.uniform(0, 5, size=20))}
        table = rank_arcs(costs, "D_0")
        mean = np.mean(list(table.rankpct_map().values()))
        assert mean == pytest.approx((20 - 1) / (2 * 20), abs=1e-15)

    def test_lower_cost_never_ranks_worse(self):
        rng = np.random.default_rng(2)
        costs = {f"FC_{i}": float(c) for i, c in enumerate(rng.uniform(0, 5, size=30))}
        table = rank_arcs(costs, "D_0")
        for a in costs:
            for b in costs:
                if costs[a] < costs[b]:
                    assert table.rank(a) < table.rank(b)
                    assert table.rankpct(a) > table.rankpct(b)

    def test_no_distance_law(self):
        # a far origin with low predicted cost outranks near ones
        costs = {"near_1": 4.0, "near_2": 3.5, "far": 0.8}
        table = rank_arcs(costs, "D_0")
        assert table.rank("far") == 0

    def test_duplicate_origins_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            rank_arcs([("A", 1.0), ("A", 2.0)], "D_0")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rank_arcs({}, "D_0")


@pytest.fixture(scope="module")
def setup():
    arcs = make_arcs(n_fc=4, n_dest=5, seed=21)
    fc_set, dest_set = node_sets_from_arcs(arcs)
    tables = build_signature_tables(fc_set, dest_set, small_grid())
    return arcs, tables


class TestPredictCosts:
    def test_zero_tree_model_constant(self, setup):
        arcs, tables = setup
        rng = np.random.default_rng(3)
        model = GradientBoostedRegressor(n_iterations=0).fit(
            rng.normal(size=(10, 14)), np.full(10, 3.5)
        )
        preds = predict_costs(model, arcs, tables)
        assert all(v == 3.5 for v in preds.costs.values())
        assert preds.clamped == ()

    def test_deterministic(self, setup):
        arcs, tables = setup
        rng = np.random.default_rng(4)
        X = rng.normal(size=(30, 14))
        y = rng.uniform(1, 5, size=30)
        model = GradientBoostedRegressor(n_iterations=10).fit(X, y)
        a = predict_costs(model, arcs, tables)
        b = predict_costs(model, arcs, tables)
        assert a.costs == b.costs

    def test_matches_per_arc_oracle(self, setup):
        arcs, tables = setup
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 14))
        y = rng.uniform(0.5, 4, size=40)
        model = GradientBoostedRegressor(n_iterations=15).fit(X, y)
        preds = predict_costs(model, arcs, tables)
        from lanesig.features import build_features

        for arc in arcs:
            fv = build_features(arc, tables, "cost")
            expected = float(model.predict(fv.values.reshape(1, -1))[0])
            assert preds.costs[(arc.origin_id, arc.dest_id)] == max(expected, 0.0)

    def test_negative_predictions_clamped_and_flagged(self, setup):
        arcs, tables = setup
        model = LinearFlowRegressor()
        model.coef_ = np.zeros(14)
        model.intercept_ = -2.0
        model.n_features_in_ = 14
        model.rank_deficient_ = False
        preds = predict_costs(model, arcs, tables)
        assert all(v == 0.0 for v in preds.costs.values())
        assert len(preds.clamped) == len(arcs)

    def test_rank_all_groups_by_destination(self, setup):
        arcs, tables = setup
        rng = np.random.default_rng(6)
        X = rng.normal(size=(30, 14))
        model = GradientBoostedRegressor(n_iterations=5).fit(X, rng.uniform(1, 3, size=30))
        tables_by_dest = rank_all(predict_costs(model, arcs, tables), week=45)
        assert set(tables_by_dest) == {a.dest_id for a in arcs}
        for dest, table in tables_by_dest.items():
            assert table.week == 45
            assert table.n_fc == 4


class TestCsvExport:
    def test_layout(self, tmp_path):
        table = rank_arcs({"A": 0.5, "B": 1.2}, "D_0", week=7)
        path = tmp_path / "ranks.csv"
        write_ranking_csv([table], path)
        lines = path.read_text().splitlines()
        assert lines[0] == "dest_id,week,rank,origin_id,predicted_cost,rankpct"
        assert lines[1].split(",") == ["D_0", "7", "0", "A", "0.5", "0.5"]
        assert lines[2].split(",") == ["D_0", "7", "1", "B", "1.2", "0.0"]
