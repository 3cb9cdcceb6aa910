import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ulfsynth.nifti import write_nifti
from ulfsynth.volume import Grid, LabelMap, Volume


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)


def make_labels(
    rng: np.random.Generator,
    dims: tuple[int, int, int] = (16, 16, 16),
    num_classes: int = 5,
    spacing: float = 1.0,
) -> LabelMap:
    grid = Grid.isotropic(dims, spacing)
    data = rng.integers(0, num_classes, size=dims).astype(np.int32)
    return LabelMap(grid, data)


def make_volume(
    rng: np.random.Generator,
    dims: tuple[int, int, int] = (16, 16, 16),
    spacing: float = 1.0,
) -> Volume:
    grid = Grid.isotropic(dims, spacing)
    return Volume(grid, rng.random(dims))


def random_nonempty_mask(
    rng: np.random.Generator, dims: tuple[int, int, int], density: float = 0.2
) -> np.ndarray:
    while True:
        mask = rng.random(dims) < density
        if mask.any():
            return mask


@pytest.fixture
def dataset_dir(tmp_path, rng):
    """Three-subject on-disk dataset: label maps, images, manifest.json."""
    grid = Grid.isotropic((14, 12, 10), 1.0)
    entries = []
    for sid in ("sub-01", "sub-02", "sub-03"):
        labels = LabelMap(grid, rng.integers(0, 9, grid.dims).astype(np.int32))
        image = Volume(grid, rng.random(grid.dims))
        write_nifti(labels, tmp_path / f"{sid}_lab.nii.gz")
        write_nifti(image, tmp_path / f"{sid}_img.nii.gz")
        entries.append(
            {
                "subject_id": sid,
                "image_path": f"{sid}_img.nii.gz",
                "label_path": f"{sid}_lab.nii.gz",
            }
        )
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps({"schema_version": 1, "entries": entries}))
    return tmp_path
