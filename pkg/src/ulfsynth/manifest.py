"""Dataset manifests: which subjects exist, where their files live, QC state.

A manifest is a JSON document: ``{"schema_version": 1, "entries": [...]}``.
Each entry carries subject_id, image_path, label_path, gt_variant (GT_HF or
GT_LF), qc_status (good/bad/unrated) and split (train/val). Unknown entry
fields are preserved verbatim through load/save so sidecar tooling can stash
its own columns. (subject_id, gt_variant) pairs must be unique.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import ContractError, FormatError

SCHEMA_VERSION = 1
GT_VARIANTS = ("GT_HF", "GT_LF")
QC_STATUSES = ("good", "bad", "unrated")
SPLITS = ("train", "val")
SELECTORS = ("all", "good", "bad", "unrated", "train", "val")

_KNOWN_FIELDS = ("subject_id", "image_path", "label_path", "gt_variant", "qc_status", "split")


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    image_path: str
    label_path: str
    gt_variant: str = "GT_HF"
    qc_status: str = "unrated"
    split: str = "train"
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.subject_id:
            raise ContractError("subject_id must be non-empty")
        if self.gt_variant not in GT_VARIANTS:
            raise ContractError(f"gt_variant must be one of {GT_VARIANTS}, got {self.gt_variant!r}")
        if self.qc_status not in QC_STATUSES:
            raise ContractError(f"qc_status must be one of {QC_STATUSES}, got {self.qc_status!r}")
        if self.split not in SPLITS:
            raise ContractError(f"split must be one of {SPLITS}, got {self.split!r}")

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in _KNOWN_FIELDS}
        out.update(self.extra)
        return out

    def with_qc_status(self, qc_status: str) -> "ManifestEntry":
        return ManifestEntry(
            self.subject_id,
            self.image_path,
            self.label_path,
            self.gt_variant,
            qc_status,
            self.split,
            dict(self.extra),
        )


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        seen: set[tuple[str, str]] = set()
        for e in self.entries:
            key = (e.subject_id, e.gt_variant)
            if key in seen:
                raise ContractError(f"duplicate (subject_id, gt_variant) pair {key}")
            seen.add(key)
        object.__setattr__(self, "entries", tuple(self.entries))

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def subject_ids(self) -> list[str]:
        """Unique subject ids in first-seen order."""
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.subject_id, None)
        return list(seen)

    def get(self, subject_id: str, gt_variant: str | None = None) -> ManifestEntry:
        for e in self.entries:
            if e.subject_id == subject_id and (gt_variant is None or e.gt_variant == gt_variant):
                return e
        raise KeyError(subject_id)


def _entry_from_dict(raw: dict, where: str) -> ManifestEntry:
    if not isinstance(raw, dict):
        raise FormatError(f"{where}: entry must be an object")
    missing = [k for k in ("subject_id", "image_path", "label_path") if k not in raw]
    if missing:
        raise FormatError(f"{where}: missing fields {missing}")
    extra = {k: v for k, v in raw.items() if k not in _KNOWN_FIELDS}
    try:
        return ManifestEntry(
            subject_id=str(raw["subject_id"]),
            image_path=str(raw["image_path"]),
            label_path=str(raw["label_path"]),
            gt_variant=str(raw.get("gt_variant", "GT_HF")),
            qc_status=str(raw.get("qc_status", "unrated")),
            split=str(raw.get("split", "train")),
            extra=extra,
        )
    except ContractError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise FormatError(f"{path.name}: expected an object with an 'entries' list")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise FormatError(f"{path.name}: unsupported schema_version {version!r}")
    entries = [
        _entry_from_dict(raw, f"{path.name} entries[{i}]")
        for i, raw in enumerate(doc["entries"])
    ]
    try:
        return Manifest(tuple(entries))
    except ContractError as exc:
        raise FormatError(f"{path.name}: {exc}") from exc


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "entries": [e.to_dict() for e in manifest.entries],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def filter_manifest(manifest: Manifest, selector: str) -> tuple[Manifest, list[str]]:
    """Subset entries by QC status or split; returns (manifest, warnings).

    Selecting "good" or "bad" while unrated entries exist produces one
    warning naming how many unrated entries were left out.
    """
    if selector not in SELECTORS:
        raise ContractError(f"selector must be one of {SELECTORS}, got {selector!r}")
    warnings: list[str] = []
    if selector == "all":
        return manifest, warnings
    if selector in QC_STATUSES:
        kept = tuple(e for e in manifest.entries if e.qc_status == selector)
        if selector in ("good", "bad"):
            unrated = sum(1 for e in manifest.entries if e.qc_status == "unrated")
            if unrated:
                warnings.append(
                    f"selector {selector!r} skipped {unrated} unrated entries"
                )
    else:
        kept = tuple(e for e in manifest.entries if e.split == selector)
    return Manifest(kept), warnings
