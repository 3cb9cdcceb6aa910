"""Core volumetric data model: grids, scalar volumes, label maps, vector fields.

Arrays are indexed ``data[i, j, k]`` and stored C-contiguous, so ``k`` is the
fastest-varying axis in memory. Voxel index ``(i, j, k)`` maps to world
millimetres through ``affine @ (i, j, k, 1)`` under the voxel-center
convention. Every object here is immutable after construction (backing arrays
are marked read-only) and therefore safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ContractError

_AFFINE_SPACING_RTOL = 1e-4


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Geometry of a regular 3-D grid: shape, spacing, and world affine."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    affine: np.ndarray

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        spacing = tuple(float(s) for s in self.spacing)
        if len(dims) != 3 or any(d < 1 for d in dims):
            raise ContractError(f"dims must be three positive integers, got {self.dims}")
        if len(spacing) != 3 or any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ContractError(f"spacing must be three positive reals, got {self.spacing}")
        affine = np.array(self.affine, dtype=np.float64)
        if affine.shape != (4, 4) or not np.all(np.isfinite(affine)):
            raise ContractError("affine must be a finite 4x4 matrix")
        if not np.allclose(affine[3], (0.0, 0.0, 0.0, 1.0), atol=1e-12):
            raise ContractError("affine bottom row must be [0, 0, 0, 1]")
        if abs(np.linalg.det(affine[:3, :3])) < 1e-12:
            raise ContractError("affine direction block is singular")
        norms = np.linalg.norm(affine[:3, :3], axis=0)
        if not np.allclose(norms, spacing, rtol=_AFFINE_SPACING_RTOL, atol=1e-7):
            raise ContractError(
                f"affine column norms {norms} disagree with spacing {spacing}"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", _frozen(affine))

    @classmethod
    def isotropic(
        cls,
        dims: tuple[int, int, int],
        spacing: float = 1.0,
        origin: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ) -> "Grid":
        affine = np.diag([spacing, spacing, spacing, 1.0])
        affine[:3, 3] = origin
        return cls(dims, (spacing, spacing, spacing), affine)

    @classmethod
    def from_affine(cls, dims: tuple[int, int, int], affine: np.ndarray) -> "Grid":
        """Build a grid deriving spacing from the affine column norms."""
        affine = np.asarray(affine, dtype=np.float64)
        norms = np.linalg.norm(affine[:3, :3], axis=0)
        return cls(tuple(dims), tuple(norms), affine)

    @property
    def num_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def voxel_volume_mm3(self) -> float:
        return float(abs(np.linalg.det(self.affine[:3, :3])))

    def index_coords(self) -> np.ndarray:
        """All voxel indices as an (N, 3) float64 array in C scan order."""
        ii, jj, kk = np.meshgrid(
            np.arange(self.dims[0], dtype=np.float64),
            np.arange(self.dims[1], dtype=np.float64),
            np.arange(self.dims[2], dtype=np.float64),
            indexing="ij",
        )
        return np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()])

    def voxel_to_world(self, indices: np.ndarray) -> np.ndarray:
        """Map (N, 3) voxel indices to world mm coordinates."""
        indices = np.asarray(indices, dtype=np.float64)
        return indices @ self.affine[:3, :3].T + self.affine[:3, 3]

    def world_to_voxel(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 3) world mm coordinates to fractional voxel indices."""
        points = np.asarray(points, dtype=np.float64)
        inv = np.linalg.inv(self.affine)
        return points @ inv[:3, :3].T + inv[:3, 3]

    def center_world(self) -> np.ndarray:
        """World coordinates of the grid's geometric center voxel position."""
        center_idx = (np.asarray(self.dims, dtype=np.float64) - 1.0) / 2.0
        return self.voxel_to_world(center_idx[None, :])[0]

    def same_geometry(self, other: "Grid", atol: float = 1e-6) -> bool:
        return self.dims == other.dims and bool(
            np.allclose(self.affine, other.affine, atol=atol)
        )

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Grid(dims={self.dims}, spacing={tuple(round(s, 6) for s in self.spacing)})"


def _check_shape(grid: Grid, data: np.ndarray, what: str) -> None:
    if tuple(data.shape[:3]) != grid.dims:
        raise ContractError(
            f"{what} shape {data.shape} does not match grid dims {grid.dims}"
        )


@dataclass(frozen=True, eq=False)
class Volume:
    """A scalar image on a grid; data is float64 and read-only."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ContractError(f"volume data must be 3-D, got shape {data.shape}")
        _check_shape(self.grid, data, "volume data")
        if not np.all(np.isfinite(data)):
            raise ContractError("volume data contains non-finite values")
        object.__setattr__(self, "data", _frozen(data))

    def with_data(self, data: np.ndarray) -> "Volume":
        return Volume(self.grid, data)


@dataclass(frozen=True, eq=False)
class LabelMap:
    """An integer segmentation on a grid with a label vocabulary.

    Every voxel holds 0 (background) or an id present in `vocabulary`
    (id -> structure name). Data is int32 and read-only.
    """

    grid: Grid
    data: np.ndarray
    vocabulary: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            raise ContractError(f"label data must be integer, got dtype {data.dtype}")
        data = data.astype(np.int32, copy=False)
        if data.ndim != 3:
            raise ContractError(f"label data must be 3-D, got shape {data.shape}")
        _check_shape(self.grid, data, "label data")
        vocab = {int(k): str(v) for k, v in dict(self.vocabulary).items()}
        if any(k <= 0 for k in vocab):
            raise ContractError("vocabulary ids must be positive integers")
        present = np.unique(data)
        if present.size and present[0] < 0:
            raise ContractError("label data contains negative values")
        if not vocab:
            vocab = {int(v): f"label_{int(v)}" for v in present if v != 0}
        else:
            stray = [int(v) for v in present if v != 0 and int(v) not in vocab]
            if stray:
                raise ContractError(f"label values {stray} missing from vocabulary")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "vocabulary", MappingProxyType(vocab))

    def with_data(self, data: np.ndarray) -> "LabelMap":
        return LabelMap(self.grid, data, dict(self.vocabulary))

    def present_labels(self) -> list[int]:
        vals = np.unique(self.data)
        return [int(v) for v in vals if v != 0]


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """A per-voxel world-space offset field in millimetres, shape dims + (3,)."""

    grid: Grid
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 4 or vectors.shape[3] != 3:
            raise ContractError(
                f"displacement vectors must have shape dims + (3,), got {vectors.shape}"
            )
        _check_shape(self.grid, vectors, "displacement vectors")
        if not np.all(np.isfinite(vectors)):
            raise ContractError("displacement vectors contain non-finite values")
        object.__setattr__(self, "vectors", _frozen(vectors))

    @classmethod
    def zero(cls, grid: Grid) -> "DisplacementField":
        return cls(grid, np.zeros(grid.dims + (3,), dtype=np.float64))
