"""Grid-to-grid resampling and displacement-field warping.

Both operations map every output voxel back into the source volume and
sample there (backward mapping), so no holes appear. Points outside the
source volume read as 0. Interpolation is "linear" for scalar volumes and
"nearest" for label maps; resampling a LabelMap with linear interpolation is
a contract violation.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ContractError
from .volume import DisplacementField, Grid, LabelMap, Volume

INTERP_MODES = ("linear", "nearest")


def _check_interp(obj: Volume | LabelMap, interp: str) -> None:
    if interp not in INTERP_MODES:
        raise ContractError(f"interp must be one of {INTERP_MODES}, got {interp!r}")
    if isinstance(obj, LabelMap) and interp == "linear":
        raise ContractError("label maps must be resampled with nearest interpolation")


def _sample(obj: Volume | LabelMap, coords: np.ndarray, interp: str) -> np.ndarray:
    if interp == "linear":
        return kernels.sample_linear(obj.data, coords)
    return kernels.sample_nearest(obj.data, coords)


def _rebuild(obj: Volume | LabelMap, grid: Grid, flat: np.ndarray) -> Volume | LabelMap:
    data = flat.reshape(grid.dims)
    if isinstance(obj, LabelMap):
        return LabelMap(grid, data, dict(obj.vocabulary))
    return Volume(grid, data)


def resample(
    obj: Volume | LabelMap, target_grid: Grid, interp: str | None = None
) -> Volume | LabelMap:
    """Resample onto `target_grid` through the two grids' world affines.

    `interp` defaults by type: linear for volumes, nearest for label maps.
    """
    if interp is None:
        interp = "nearest" if isinstance(obj, LabelMap) else "linear"
    _check_interp(obj, interp)
    # Voxel(target) -> world -> voxel(source), composed into one affine.
    mat = np.linalg.inv(obj.grid.affine) @ target_grid.affine
    idx = target_grid.index_coords()
    coords = idx @ mat[:3, :3].T + mat[:3, 3]
    return _rebuild(obj, target_grid, _sample(obj, coords, interp))


def warp(
    obj: Volume | LabelMap, field: DisplacementField, interp: str | None = None
) -> Volume | LabelMap:
    """Backward-warp: output voxel x samples the source at world(x) + field(x).

    The field must live on the same grid as the input; the output keeps that
    grid.
    """
    if interp is None:
        interp = "nearest" if isinstance(obj, LabelMap) else "linear"
    _check_interp(obj, interp)
    if not field.grid.same_geometry(obj.grid):
        raise ContractError("displacement field grid does not match the input grid")
    grid = obj.grid
    idx = grid.index_coords()
    world = grid.voxel_to_world(idx) + field.vectors.reshape(-1, 3)
    coords = grid.world_to_voxel(world)
    return _rebuild(obj, grid, _sample(obj, coords, interp))
