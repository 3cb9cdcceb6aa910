"""Human-in-the-loop annotation QC: ratings, misregistration flagging.

Ratings accumulate as an append-only history; the latest record per subject
is the effective rating. `flag_misregistration` splits per-subject alignment
scores into suspect/ok groups with an exhaustive two-class threshold search
(minimum within-class variance), which is advisory: it prioritizes human
review and never edits a manifest by itself. `sentinel_scores` condenses a
prediction/GT pair into one score per subject by averaging Dice over a pair
of sentinel structures chosen to sit on opposite sides of typical
misregistration (default: right lateral ventricle and right caudate
nucleus).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError, FormatError
from .manifest import Manifest, QC_STATUSES
from .metrics import dice
from .volume import LabelMap

QC_CSV_COLUMNS = ("subject_id", "rating", "affected_structures", "rater", "timestamp", "note")
DEFAULT_SENTINELS = ("right_lateral_ventricle", "right_caudate_nucleus")

_STRUCTURE_SEPARATOR = ";"


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class QCRecord:
    subject_id: str
    rating: str
    affected_structures: tuple[str, ...] = ()
    rater: str = ""
    timestamp: str = ""
    note: str = ""

    def __post_init__(self) -> None:
        if not self.subject_id:
            raise ContractError("subject_id must be non-empty")
        if self.rating not in QC_STATUSES:
            raise ContractError(f"rating must be one of {QC_STATUSES}, got {self.rating!r}")
        structures = tuple(str(s) for s in self.affected_structures)
        if any(_STRUCTURE_SEPARATOR in s for s in structures):
            raise ContractError(
                f"structure names may not contain {_STRUCTURE_SEPARATOR!r}"
            )
        object.__setattr__(self, "affected_structures", structures)
        ts = self.timestamp or utc_timestamp()
        try:
            _parse_timestamp(ts)
        except ValueError as exc:
            raise ContractError(f"timestamp {ts!r} is not ISO 8601") from exc
        object.__setattr__(self, "timestamp", ts)


def _parse_timestamp(ts: str) -> datetime:
    parsed = datetime.fromisoformat(ts)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


class QCStore:
    """Append-only rating history with a latest-per-subject view.

    Within one (subject, rater) stream, timestamps must not decrease; the
    latest timestamp wins the view, later insertion breaking exact ties.
    """

    def __init__(self, records: Iterable[QCRecord] = ()):
        self._history: list[QCRecord] = []
        for record in records:
            self.add(record)

    def add(self, record: QCRecord) -> None:
        prior = [
            r
            for r in self._history
            if r.subject_id == record.subject_id and r.rater == record.rater
        ]
        if prior and _parse_timestamp(record.timestamp) < _parse_timestamp(prior[-1].timestamp):
            raise ContractError(
                f"timestamp for {record.subject_id!r} by {record.rater!r} moves backwards"
            )
        self._history.append(record)

    @property
    def history(self) -> tuple[QCRecord, ...]:
        return tuple(self._history)

    def latest(self, subject_id: str) -> QCRecord | None:
        best: QCRecord | None = None
        for record in self._history:
            if record.subject_id != subject_id:
                continue
            if best is None or _parse_timestamp(record.timestamp) >= _parse_timestamp(
                best.timestamp
            ):
                best = record
        return best

    def latest_view(self) -> list[QCRecord]:
        """One record per subject (the effective rating), sorted by subject."""
        return [
            rec
            for rec in (self.latest(s) for s in sorted({r.subject_id for r in self._history}))
            if rec is not None
        ]

    def __len__(self) -> int:
        return len(self._history)


def export_csv(store: QCStore, path: str | Path) -> None:
    """Write the latest view, one row per subject, stable column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(QC_CSV_COLUMNS)
        for rec in store.latest_view():
            writer.writerow(
                [
                    rec.subject_id,
                    rec.rating,
                    _STRUCTURE_SEPARATOR.join(rec.affected_structures),
                    rec.rater,
                    rec.timestamp,
                    rec.note,
                ]
            )


def _record_from_row(row: dict, line: int, name: str) -> QCRecord:
    try:
        structures = tuple(
            s for s in (row["affected_structures"] or "").split(_STRUCTURE_SEPARATOR) if s
        )
        return QCRecord(
            subject_id=row["subject_id"],
            rating=row["rating"],
            affected_structures=structures,
            rater=row["rater"],
            timestamp=row["timestamp"],
            note=row["note"],
        )
    except KeyError as exc:
        raise FormatError(f"{name} line {line}: missing column {exc}") from exc
    except ContractError as exc:
        raise FormatError(f"{name} line {line}: {exc}") from exc


def import_csv(path: str | Path) -> QCStore:
    """Read rating rows (history order) back into a store."""
    path = Path(path)
    store = QCStore()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != QC_CSV_COLUMNS:
            raise FormatError(
                f"{path.name}: expected header {','.join(QC_CSV_COLUMNS)}, got {reader.fieldnames}"
            )
        for row in reader:
            store.add(_record_from_row(row, reader.line_num, path.name))
    return store


def append_csv_row(record: QCRecord, path: str | Path) -> None:
    """Append one history row, creating the file with a header when absent."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(QC_CSV_COLUMNS)
        writer.writerow(
            [
                record.subject_id,
                record.rating,
                _STRUCTURE_SEPARATOR.join(record.affected_structures),
                record.rater,
                record.timestamp,
                record.note,
            ]
        )


@dataclass(frozen=True)
class FlagResult:
    threshold: float | None
    assignments: Mapping[str, str]  # subject -> "suspect" | "ok"
    class_means: tuple[float, float] | None
    degenerate: bool = False

    def suspects(self) -> list[str]:
        return sorted(s for s, a in self.assignments.items() if a == "suspect")


def _two_class_threshold(values: np.ndarray) -> float:
    """Candidate threshold minimizing the weighted within-class variance.

    Candidates are midpoints between consecutive distinct sorted values, so
    the returned threshold is strictly between the two classes it separates.
    """
    distinct = np.unique(values)
    candidates = (distinct[:-1] + distinct[1:]) / 2.0
    best_t = candidates[0]
    best_score = np.inf
    n = values.size
    for t in candidates:
        low = values[values < t]
        high = values[values >= t]
        score = (low.size / n) * low.var() + (high.size / n) * high.var()
        if score < best_score:
            best_score = score
            best_t = t
    return float(best_t)


def flag_misregistration(
    scores: Mapping[str, float], manual_threshold: float | None = None
) -> FlagResult:
    """Split subjects into suspect (score below threshold) and ok groups.

    With no manual threshold, the split point is found by exhaustive search
    over midpoints between sorted distinct scores, minimizing within-class
    variance. Identical scores everywhere make the result degenerate: all
    subjects are "ok" and the threshold is None.
    """
    if len(scores) < 2:
        raise ContractError("flagging needs at least two subjects")
    subjects = sorted(scores)
    values = np.array([float(scores[s]) for s in subjects], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ContractError("scores must be finite")

    if manual_threshold is None:
        if np.unique(values).size == 1:
            return FlagResult(
                threshold=None,
                assignments={s: "ok" for s in subjects},
                class_means=None,
                degenerate=True,
            )
        threshold = _two_class_threshold(values)
    else:
        threshold = float(manual_threshold)

    assignments = {
        s: ("suspect" if float(scores[s]) < threshold else "ok") for s in subjects
    }
    low = values[values < threshold]
    high = values[values >= threshold]
    class_means = (
        float(low.mean()) if low.size else float("nan"),
        float(high.mean()) if high.size else float("nan"),
    )
    return FlagResult(threshold=threshold, assignments=assignments, class_means=class_means)


@dataclass(frozen=True)
class SentinelScore:
    subject_id: str
    mean_dice: float | None
    per_label: Mapping[int, float]
    missing_count: int = 0


def sentinel_scores(
    preds: Mapping[str, LabelMap],
    gts: Mapping[str, LabelMap],
    sentinel_labels: Iterable[int],
) -> dict[str, SentinelScore]:
    """Mean Dice over sentinel structures per subject.

    A sentinel absent from the ground truth is excluded from the mean and
    counted; a subject whose sentinels are all absent gets a None score.
    An empty prediction against a present GT structure scores 0 and stays
    in the mean, since that is exactly the misregistration signal.
    """
    labels = [int(l) for l in sentinel_labels]
    if not labels:
        raise ContractError("at least one sentinel label is required")
    if set(preds) != set(gts):
        raise ContractError("prediction and ground-truth subject sets differ")
    out: dict[str, SentinelScore] = {}
    for subject_id in sorted(preds):
        pred = preds[subject_id]
        gt = gts[subject_id]
        per_label: dict[int, float] = {}
        missing = 0
        for label in labels:
            if not bool((gt.data == label).any()):
                missing += 1
                continue
            per_label[label] = dice(pred, gt, label)
        mean = float(np.mean(list(per_label.values()))) if per_label else None
        out[subject_id] = SentinelScore(
            subject_id=subject_id, mean_dice=mean, per_label=per_label, missing_count=missing
        )
    return out


def apply_ratings(manifest: Manifest, store: QCStore) -> tuple[Manifest, list[str]]:
    """Stamp each entry's qc_status from the store's latest view.

    Ratings for subjects absent from the manifest come back as warnings.
    """
    known = set(manifest.subject_ids())
    warnings = [
        f"rating for unknown subject {rec.subject_id!r} ignored"
        for rec in store.latest_view()
        if rec.subject_id not in known
    ]
    entries = []
    for entry in manifest:
        latest = store.latest(entry.subject_id)
        entries.append(entry.with_qc_status(latest.rating) if latest else entry)
    return Manifest(tuple(entries)), warnings
