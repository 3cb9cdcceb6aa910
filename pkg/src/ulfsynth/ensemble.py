"""Voxel-wise majority voting over member segmentations, plus recipe runs.

A recipe names its member models and where their per-subject predictions
live (a path pattern with a ``{subject_id}`` placeholder). Recipes may point
at the output directory of an earlier recipe, so fused outputs can feed
later ensembles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ContractError, FormatError
from .manifest import Manifest
from .nifti import read_nifti, write_nifti
from .volume import LabelMap

TIE_BREAK_MODES = ("first_member", "lowest_label")

_TIE_CODES = {
    "first_member": kernels.TIE_FIRST_MEMBER,
    "lowest_label": kernels.TIE_LOWEST_LABEL,
}


def majority_vote(maps: list[LabelMap], tie_break: str = "first_member") -> LabelMap:
    """Per-voxel plurality label across members.

    Background (0) votes like any label. Ties go to the earliest-listed
    member's tied label ("first_member") or the smallest tied id
    ("lowest_label"). Members must share grid and vocabulary.
    """
    if len(maps) < 2:
        raise ContractError("majority voting needs at least two members")
    if tie_break not in TIE_BREAK_MODES:
        raise ContractError(f"tie_break must be one of {TIE_BREAK_MODES}, got {tie_break!r}")
    first = maps[0]
    vocab_ids = set(first.vocabulary)
    for other in maps[1:]:
        if not other.grid.same_geometry(first.grid):
            raise ContractError("members live on different grids")
        if set(other.vocabulary) != vocab_ids:
            raise ContractError("members use different vocabularies")

    # Compact ids to 0..L-1 for the counting kernel, then map back.
    ids = np.array([0] + sorted(vocab_ids), dtype=np.int32)
    lut = np.zeros(int(ids.max()) + 1, dtype=np.int32)
    lut[ids] = np.arange(ids.size, dtype=np.int32)
    votes = np.stack([lut[m.data.reshape(-1)] for m in maps])
    fused = kernels.vote_argmax(votes, ids.size, _TIE_CODES[tie_break])
    return LabelMap(first.grid, ids[fused].reshape(first.grid.dims), dict(first.vocabulary))


@dataclass(frozen=True)
class RecipeMember:
    model_id: str
    path_pattern: str

    def __post_init__(self) -> None:
        if "{subject_id}" not in self.path_pattern:
            raise ContractError(
                f"member {self.model_id!r}: path_pattern needs a {{subject_id}} placeholder"
            )

    def path_for(self, subject_id: str) -> Path:
        return Path(self.path_pattern.format(subject_id=subject_id))


@dataclass(frozen=True)
class EnsembleRecipe:
    name: str
    members: tuple[RecipeMember, ...]
    tie_break: str = "first_member"

    def __post_init__(self) -> None:
        if len(self.members) < 2:
            raise ContractError(f"recipe {self.name!r} needs at least two members")
        if self.tie_break not in TIE_BREAK_MODES:
            raise ContractError(f"tie_break must be one of {TIE_BREAK_MODES}")
        ids = [m.model_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ContractError(f"recipe {self.name!r} lists duplicate member ids")


def load_recipe(path: str | Path) -> EnsembleRecipe:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path.name}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "members" not in doc:
        raise FormatError(f"{path.name}: expected an object with a 'members' list")
    try:
        members = tuple(
            RecipeMember(str(m["model_id"]), str(m["path_pattern"])) for m in doc["members"]
        )
        return EnsembleRecipe(
            name=str(doc.get("name", path.stem)),
            members=members,
            tie_break=str(doc.get("tie_break", "first_member")),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path.name}: malformed member entry: {exc}") from exc
    except ContractError as exc:
        raise FormatError(f"{path.name}: {exc}") from exc


def save_recipe(recipe: EnsembleRecipe, path: str | Path) -> None:
    doc = {
        "name": recipe.name,
        "tie_break": recipe.tie_break,
        "members": [
            {"model_id": m.model_id, "path_pattern": m.path_pattern} for m in recipe.members
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


@dataclass(frozen=True)
class RecipeRun:
    recipe: EnsembleRecipe
    fused_paths: dict[str, Path] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


def run_recipe(recipe: EnsembleRecipe, manifest: Manifest, out_dir: str | Path) -> RecipeRun:
    """Fuse every manifest subject; missing member files become error entries.

    Writes ``<subject_id>.nii.gz`` per subject plus a provenance JSON naming
    the recipe, members, and tie-break mode.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fused_paths: dict[str, Path] = {}
    errors: list[str] = []
    for subject_id in manifest.subject_ids():
        member_maps: list[LabelMap] = []
        failed = False
        for member in recipe.members:
            path = member.path_for(subject_id)
            if not path.exists():
                errors.append(f"{subject_id}: member {member.model_id} missing file {path}")
                failed = True
                continue
            member_maps.append(read_nifti(path, as_labels=True))
        if failed:
            continue
        fused = majority_vote(member_maps, recipe.tie_break)
        out_path = out_dir / f"{subject_id}.nii.gz"
        write_nifti(fused, out_path)
        fused_paths[subject_id] = out_path

    provenance = {
        "recipe": recipe.name,
        "tie_break": recipe.tie_break,
        "members": [m.model_id for m in recipe.members],
        "subjects_fused": sorted(fused_paths),
        "errors": errors,
    }
    (out_dir / "ensemble_provenance.json").write_text(json.dumps(provenance, indent=2) + "\n")
    return RecipeRun(recipe=recipe, fused_paths=fused_paths, errors=errors)
