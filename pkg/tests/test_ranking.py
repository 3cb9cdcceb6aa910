import csv

import numpy as np
import pytest

from ulfsynth.errors import ContractError
from ulfsynth.metrics import METRIC_NAMES, MetricValue, MetricsReport
from ulfsynth.ranking import (
    Leaderboard,
    aggregate_reports,
    norm_avg,
    write_leaderboard_csv,
)

from oracles import norm_avg_oracle


def board_from(aggregates, missing=None):
    return Leaderboard(tuple(aggregates), aggregates, missing or {})


def random_aggregates(rng, names):
    out = {}
    for name in names:
        out[name] = {
            "DSC": float(rng.uniform(0, 1)),
            "HD": float(rng.uniform(0, 30)),
            "HD95": float(rng.uniform(0, 20)),
            "ASSD": float(rng.uniform(0, 5)),
            "RVE": float(rng.uniform(0, 2)),
        }
    return out


def make_report(subject_id, cells):
    """cells: {(label, metric): MetricValue}"""
    return MetricsReport(subject_id=subject_id, label_names={}, values=cells)


class TestNormAvg:
    def test_matches_oracle_random(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 7))
            aggs = random_aggregates(rng, [f"team{i}" for i in range(n)])
            got = norm_avg(board_from(aggs))
            want = norm_avg_oracle(aggs)
            for name in aggs:
                assert got[name] == pytest.approx(want[name], abs=1e-12)

    def test_dominating_pair_scores_zero_and_one(self):
        best = {"DSC": 0.95, "HD": 2.0, "HD95": 1.0, "ASSD": 0.5, "RVE": 0.05}
        worst = {"DSC": 0.60, "HD": 9.0, "HD95": 6.0, "ASSD": 2.0, "RVE": 0.40}
        scores = norm_avg(board_from({"a": best, "b": worst}))
        assert scores["a"] == 0.0
        assert scores["b"] == 1.0

    def test_single_submission_scores_zero(self):
        aggs = {"solo": {"DSC": 0.5, "HD": 3.0, "HD95": 2.0, "ASSD": 1.0, "RVE": 0.2}}
        assert norm_avg(board_from(aggs)) == {"solo": 0.0}

    def test_affine_invariance_per_column(self, rng):
        # shifting and positively scaling any one column leaves scores unchanged
        names = ["a", "b", "c", "d"]
        aggs = random_aggregates(rng, names)
        base = norm_avg(board_from(aggs))
        for metric in METRIC_NAMES:
            scaled = {n: dict(aggs[n]) for n in names}
            for n in names:
                if metric == "DSC":
                    # affine map in the reversed (1 - DSC) domain
                    scaled[n][metric] = 1.0 - (3.0 * (1.0 - aggs[n][metric]) + 0.7)
                else:
                    scaled[n][metric] = 3.0 * aggs[n][metric] + 0.7
            got = norm_avg(board_from(scaled))
            for n in names:
                assert got[n] == pytest.approx(base[n], abs=1e-12)

    def test_degenerate_column_contributes_zero(self):
        # identical HD everywhere: that column is 0 for everyone
        a = {"DSC": 0.9, "HD": 5.0, "HD95": 1.0, "ASSD": 0.5, "RVE": 0.1}
        b = {"DSC": 0.5, "HD": 5.0, "HD95": 3.0, "ASSD": 1.5, "RVE": 0.3}
        scores = norm_avg(board_from({"a": a, "b": b}))
        # b is worst in the 4 varying columns, each normalized to 1
        assert scores["b"] == pytest.approx(4.0 / 5.0)
        assert scores["a"] == 0.0

    def test_dsc_reversed_higher_is_better(self):
        # identical except DSC: higher DSC must win (lower score)
        a = {"DSC": 0.9, "HD": 5.0, "HD95": 3.0, "ASSD": 1.0, "RVE": 0.2}
        b = {"DSC": 0.6, "HD": 5.0, "HD95": 3.0, "ASSD": 1.0, "RVE": 0.2}
        scores = norm_avg(board_from({"a": a, "b": b}))
        assert scores["a"] < scores["b"]

    def test_scores_within_unit_interval(self, rng):
        for _ in range(10):
            aggs = random_aggregates(rng, [f"t{i}" for i in range(5)])
            for v in norm_avg(board_from(aggs)).values():
                assert 0.0 <= v <= 1.0


class TestLeaderboardValidation:
    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            Leaderboard((), {})

    def test_missing_metric_rejected(self):
        aggs = {"a": {"DSC": 0.5, "HD": 1.0, "HD95": 1.0, "ASSD": 1.0}}
        with pytest.raises(ContractError, match="all of"):
            Leaderboard(("a",), aggs)

    def test_column_order_follows_submissions(self):
        aggs = {
            "x": {m: 1.0 for m in METRIC_NAMES},
            "y": {m: 2.0 for m in METRIC_NAMES},
        }
        board = Leaderboard(("y", "x"), aggs)
        assert board.column("HD").tolist() == [2.0, 1.0]


class TestAggregateReports:
    def test_means_over_subjects_and_labels(self):
        r1 = make_report(
            "s1",
            {
                (1, m): MetricValue(v)
                for m, v in zip(METRIC_NAMES, (0.8, 4.0, 3.0, 1.0, 0.1))
            },
        )
        r2 = make_report(
            "s2",
            {
                (1, m): MetricValue(v)
                for m, v in zip(METRIC_NAMES, (0.6, 6.0, 5.0, 3.0, 0.3))
            },
        )
        board = aggregate_reports({"team": [r1, r2]})
        assert board.aggregates["team"]["DSC"] == pytest.approx(0.7)
        assert board.aggregates["team"]["HD"] == pytest.approx(5.0)
        assert board.missing_counts["team"] == 0

    def test_missing_values_excluded_and_counted(self):
        cells = {(1, m): MetricValue(1.0) for m in METRIC_NAMES}
        cells.update({(2, m): MetricValue.missing("gt-empty") for m in METRIC_NAMES})
        cells.update({(3, m): MetricValue(3.0) for m in METRIC_NAMES})
        board = aggregate_reports({"team": [make_report("s", cells)]})
        assert board.aggregates["team"]["ASSD"] == pytest.approx(2.0)
        assert board.missing_counts["team"] == 5

    def test_all_missing_metric_rejected(self):
        cells = {(1, m): MetricValue(1.0) for m in METRIC_NAMES}
        cells[(1, "HD")] = MetricValue.missing("pred-empty")
        with pytest.raises(ContractError, match="no usable HD"):
            aggregate_reports({"team": [make_report("s", cells)]})

    def test_no_submissions_rejected(self):
        with pytest.raises(ContractError):
            aggregate_reports({})

    def test_submission_order_preserved(self):
        cells = {(1, m): MetricValue(1.0) for m in METRIC_NAMES}
        board = aggregate_reports(
            {"zeta": [make_report("s", cells)], "alpha": [make_report("s", cells)]}
        )
        assert board.submissions == ("zeta", "alpha")


class TestLeaderboardCsv:
    def test_golden_layout_and_sorting(self, tmp_path):
        best = {"DSC": 0.95, "HD": 2.0, "HD95": 1.0, "ASSD": 0.5, "RVE": 0.05}
        worst = {"DSC": 0.60, "HD": 9.0, "HD95": 6.0, "ASSD": 2.0, "RVE": 0.40}
        board = Leaderboard(
            ("loser", "winner"),
            {"loser": worst, "winner": best},
            {"loser": 3, "winner": 0},
        )
        path = tmp_path / "board.csv"
        write_leaderboard_csv(board, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "submission",
            "DSC",
            "HD",
            "HD95",
            "ASSD",
            "RVE",
            "norm_avg",
            "missing_values",
        ]
        assert [r[0] for r in rows[1:]] == ["winner", "loser"]
        assert float(rows[1][6]) == 0.0
        assert float(rows[2][6]) == 1.0
        assert rows[2][7] == "3"

    def test_values_round_trip_exactly(self, tmp_path, rng):
        aggs = random_aggregates(rng, ["a", "b", "c"])
        board = board_from(aggs)
        path = tmp_path / "board.csv"
        write_leaderboard_csv(board, path)
        scores = norm_avg(board)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        for row in rows:
            name = row["submission"]
            for m in METRIC_NAMES:
                assert float(row[m]) == aggs[name][m]
            assert float(row["norm_avg"]) == scores[name]

    def test_ties_break_by_name(self, tmp_path):
        same = {m: 1.0 for m in METRIC_NAMES}
        board = Leaderboard(("bravo", "alpha"), {"bravo": same, "alpha": same})
        path = tmp_path / "board.csv"
        write_leaderboard_csv(board, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert [r[0] for r in rows[1:]] == ["alpha", "bravo"]
