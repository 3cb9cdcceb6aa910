"""Label schemes and label-map harmonization.

A LabelScheme is an ordered class list (contiguous ids from 1), a source-id
mapping used to pull foreign segmentations into the scheme, and the set of
ids excluded from evaluation. Two schemes ship builtin:

* ``LISA``: 8 subcortical structures (left/right hippocampus, lateral
  ventricle, caudate nucleus, lentiform nucleus), with the lateral
  ventricles flagged as excluded from evaluation.
* ``LISA_PLUS``: the same 8 plus 6 whole-brain tissue classes (white matter,
  cortical gray matter, CSF, cerebellum, brainstem, deep gray matter).

Mapping tables for concrete source datasets are data, not code: CSV files
with columns ``source_id,source_name,target_id`` loaded via `load_mapping`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, FormatError
from .volume import LabelMap

MAPPING_COLUMNS = ("source_id", "source_name", "target_id")


@dataclass(frozen=True, eq=False)
class LabelScheme:
    """An ordered label vocabulary with a source-id mapping."""

    name: str
    classes: tuple[tuple[int, str], ...]
    mapping: Mapping[int, int] = field(default_factory=dict)
    excluded_from_eval: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        ids = [cid for cid, _ in self.classes]
        if ids != list(range(1, len(ids) + 1)):
            raise ContractError(
                f"scheme {self.name!r}: class ids must be contiguous from 1, got {ids}"
            )
        names = [n for _, n in self.classes]
        if len(set(names)) != len(names):
            raise ContractError(f"scheme {self.name!r}: duplicate class names")
        mapping = {int(k): int(v) for k, v in dict(self.mapping).items()}
        valid = set(ids) | {0}
        bad = sorted(v for v in mapping.values() if v not in valid)
        if bad:
            raise ContractError(
                f"scheme {self.name!r}: mapping targets {bad} are not scheme ids"
            )
        if not self.excluded_from_eval <= set(ids):
            raise ContractError(f"scheme {self.name!r}: excluded ids must be scheme ids")
        object.__setattr__(self, "classes", tuple((int(i), str(n)) for i, n in self.classes))
        object.__setattr__(self, "mapping", MappingProxyType(mapping))
        object.__setattr__(self, "excluded_from_eval", frozenset(self.excluded_from_eval))

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(cid for cid, _ in self.classes)

    @property
    def names(self) -> Mapping[int, str]:
        return dict(self.classes)

    def id_of(self, name: str) -> int:
        for cid, cname in self.classes:
            if cname == name:
                return cid
        raise ContractError(f"scheme {self.name!r} has no class named {name!r}")

    def eval_ids(self) -> tuple[int, ...]:
        """Scheme ids that participate in evaluation."""
        return tuple(cid for cid in self.ids if cid not in self.excluded_from_eval)

    def with_mapping(self, mapping: Mapping[int, int]) -> "LabelScheme":
        return LabelScheme(self.name, self.classes, mapping, self.excluded_from_eval)

    def vocabulary(self) -> dict[int, str]:
        return dict(self.classes)


def _paired(names: Sequence[str]) -> tuple[tuple[int, str], ...]:
    out: list[tuple[int, str]] = []
    for base in names:
        out.append((len(out) + 1, f"left_{base}"))
        out.append((len(out) + 1, f"right_{base}"))
    return tuple(out)


_SUBCORTICAL = _paired(["hippocampus", "lateral_ventricle", "caudate_nucleus", "lentiform_nucleus"])
_TISSUES = (
    "white_matter",
    "cortical_gray_matter",
    "csf",
    "cerebellum",
    "brainstem",
    "deep_gray_matter",
)

LISA = LabelScheme(
    name="LISA",
    classes=_SUBCORTICAL,
    mapping={cid: cid for cid, _ in _SUBCORTICAL},
    excluded_from_eval=frozenset({3, 4}),
)

LISA_PLUS = LabelScheme(
    name="LISA_PLUS",
    classes=_SUBCORTICAL + tuple((9 + i, n) for i, n in enumerate(_TISSUES)),
    mapping={cid: cid for cid in range(1, 15)},
    excluded_from_eval=frozenset({3, 4}),
)

BUILTIN_SCHEMES: dict[str, LabelScheme] = {"LISA": LISA, "LISA_PLUS": LISA_PLUS}


def get_scheme(name: str) -> LabelScheme:
    try:
        return BUILTIN_SCHEMES[name]
    except KeyError:
        raise ContractError(
            f"unknown scheme {name!r}; builtin schemes: {sorted(BUILTIN_SCHEMES)}"
        ) from None


def load_mapping(path: str | Path, scheme: LabelScheme) -> LabelScheme:
    """Attach a CSV mapping table (source_id,source_name,target_id) to a scheme.

    Malformed rows raise FormatError naming the line; target ids must be 0 or
    scheme ids.
    """
    path = Path(path)
    mapping: dict[int, int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MAPPING_COLUMNS:
            raise FormatError(
                f"{path.name}: expected header {','.join(MAPPING_COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            line = reader.line_num
            try:
                src = int(row["source_id"])
                dst = int(row["target_id"])
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path.name} line {line}: non-integer id") from exc
            if src in mapping:
                raise FormatError(f"{path.name} line {line}: duplicate source_id {src}")
            mapping[src] = dst
    try:
        return scheme.with_mapping(mapping)
    except ContractError as exc:
        raise FormatError(f"{path.name}: {exc}") from exc


def remap(labels: LabelMap, scheme: LabelScheme) -> LabelMap:
    """Relabel through the scheme's mapping; unmapped source ids become 0.

    The output vocabulary is the full scheme class list (classes may be
    empty in the data).
    """
    data = labels.data
    top = int(data.max()) if data.size else 0
    lut = np.zeros(max(top, max(scheme.mapping, default=0)) + 1, dtype=np.int32)
    for src, dst in scheme.mapping.items():
        if src <= top:
            lut[src] = dst
    return LabelMap(labels.grid, lut[data], scheme.vocabulary())
