"""Challenge-style leaderboard aggregation and normalized-average ranking.

Each submission's metric values are first aggregated (mean over all subjects
and labels, missing values excluded but counted). The normalized average
then makes every metric a lower-is-better column (DSC becomes 1 - DSC),
min-max normalizes each column across submissions (a constant column maps to
0), and averages the five normalized columns per submission. A submission
dominating every column scores 0; one dominated in every column scores 1;
a lone submission scores 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError
from .metrics import METRIC_NAMES, MetricsReport


@dataclass(frozen=True)
class Leaderboard:
    """Per-submission aggregate metric means plus missing-value counts."""

    submissions: tuple[str, ...]
    aggregates: Mapping[str, Mapping[str, float]]  # submission -> metric -> mean
    missing_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.submissions:
            raise ContractError("a leaderboard needs at least one submission")
        for name in self.submissions:
            row = self.aggregates.get(name)
            if row is None or set(row) != set(METRIC_NAMES):
                raise ContractError(
                    f"submission {name!r} must provide aggregates for all of {METRIC_NAMES}"
                )

    def column(self, metric: str) -> np.ndarray:
        return np.array([self.aggregates[s][metric] for s in self.submissions], dtype=np.float64)


def aggregate_reports(
    reports_by_submission: Mapping[str, Iterable[MetricsReport]],
) -> Leaderboard:
    """Mean each metric over all (subject, label) pairs per submission.

    Missing values are excluded from the means and tallied per submission.
    A submission with no usable value for some metric is a contract
    violation since its column entry would be undefined.
    """
    if not reports_by_submission:
        raise ContractError("at least one submission is required")
    aggregates: dict[str, dict[str, float]] = {}
    missing_counts: dict[str, int] = {}
    for name, reports in reports_by_submission.items():
        sums = {m: 0.0 for m in METRIC_NAMES}
        counts = {m: 0 for m in METRIC_NAMES}
        missing = 0
        for report in reports:
            for (label, metric), mv in report.values.items():
                if mv.status == "ok":
                    sums[metric] += float(mv.value)
                    counts[metric] += 1
                else:
                    missing += 1
        for metric in METRIC_NAMES:
            if counts[metric] == 0:
                raise ContractError(
                    f"submission {name!r} has no usable {metric} values to aggregate"
                )
        aggregates[name] = {m: sums[m] / counts[m] for m in METRIC_NAMES}
        missing_counts[name] = missing
    return Leaderboard(tuple(reports_by_submission), aggregates, missing_counts)


def norm_avg(board: Leaderboard) -> dict[str, float]:
    """Normalized average score per submission; lower is better.

    DSC is reversed to 1 - DSC so all five columns are lower-is-better, every
    column is min-max normalized across submissions (degenerate columns map
    to 0), and the row mean over the five columns is the score.
    """
    columns = {}
    for metric in METRIC_NAMES:
        col = board.column(metric)
        if metric == "DSC":
            col = 1.0 - col
        lo = col.min()
        hi = col.max()
        if hi > lo:
            columns[metric] = (col - lo) / (hi - lo)
        else:
            columns[metric] = np.zeros_like(col)
    matrix = np.column_stack([columns[m] for m in METRIC_NAMES])
    scores = matrix.mean(axis=1)
    return {name: float(score) for name, score in zip(board.submissions, scores)}


def write_leaderboard_csv(board: Leaderboard, path: str | Path) -> None:
    """Leaderboard CSV sorted by normalized average, best first."""
    scores = norm_avg(board)
    order = sorted(board.submissions, key=lambda s: (scores[s], s))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["submission", *METRIC_NAMES, "norm_avg", "missing_values"])
        for name in order:
            row = board.aggregates[name]
            writer.writerow(
                [
                    name,
                    *(repr(row[m]) for m in METRIC_NAMES),
                    repr(scores[name]),
                    board.missing_counts.get(name, 0),
                ]
            )
