"""Random spatial transforms: global affine plus coarse nonrigid deformation.

The sampled affine is the forward motion of the content, composed about the
volume's world center as T(center) @ T(translation) @ Rx @ Ry @ Rz @ Shear
@ Scale @ T(-center). Application is backward: output voxel x samples the
source at ``inv(affine) @ world(x) + displacement(x)``, the displacement
acting in the source frame. Labels and images pushed through the same
transform share identical sampling coordinates, so nearest-warped label
indicators match the warped label map voxel for voxel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ContractError
from ..resample import _check_interp, _rebuild, _sample
from ..volume import DisplacementField, Grid, LabelMap, Volume
from .config import GeneratorConfig


def rotation_matrix(axis: int, angle_deg: float) -> np.ndarray:
    t = np.deg2rad(angle_deg)
    c, s = np.cos(t), np.sin(t)
    m = np.eye(4)
    a0, a1 = [(1, 2), (0, 2), (0, 1)][axis]
    m[a0, a0] = c
    m[a0, a1] = -s
    m[a1, a0] = s
    m[a1, a1] = c
    return m


def _translation(offset) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = offset
    return m


def _shear_matrix(hxy: float, hxz: float, hyz: float) -> np.ndarray:
    m = np.eye(4)
    m[0, 1] = hxy
    m[0, 2] = hxz
    m[1, 2] = hyz
    return m


def _scale_matrix(scale) -> np.ndarray:
    return np.diag([scale[0], scale[1], scale[2], 1.0])


def compose_affine(
    center: np.ndarray,
    rotation_deg,
    scale,
    translation_mm,
    shear,
) -> np.ndarray:
    """Forward world-space affine about `center` (mm)."""
    rot = (
        rotation_matrix(0, rotation_deg[0])
        @ rotation_matrix(1, rotation_deg[1])
        @ rotation_matrix(2, rotation_deg[2])
    )
    return (
        _translation(center)
        @ _translation(translation_mm)
        @ rot
        @ _shear_matrix(*shear)
        @ _scale_matrix(scale)
        @ _translation(-np.asarray(center))
    )


def upsample_control_grid(control: np.ndarray, grid: Grid) -> np.ndarray:
    """Trilinearly stretch a coarse control array over a full grid.

    Control point (0, 0, 0) pins to voxel (0, 0, 0) and the last control
    point to the last voxel; interior voxels interpolate. Returns an array
    shaped `grid.dims` (+ trailing control axes, which are upsampled
    channel by channel).
    """
    control = np.asarray(control, dtype=np.float64)
    if control.ndim < 3 or any(c < 2 for c in control.shape[:3]):
        raise ContractError(f"control grid must be >= 2 per axis, got {control.shape}")
    idx = grid.index_coords()
    coords = np.empty_like(idx)
    for ax in range(3):
        n = grid.dims[ax]
        c = control.shape[ax]
        factor = (c - 1) / (n - 1) if n > 1 else 0.0
        coords[:, ax] = idx[:, ax] * factor
    if control.ndim == 3:
        return kernels.sample_linear(control, coords).reshape(grid.dims)
    channels = control.reshape(control.shape[:3] + (-1,))
    out = np.empty(grid.dims + (channels.shape[3],), dtype=np.float64)
    for ch in range(channels.shape[3]):
        out[..., ch] = kernels.sample_linear(
            np.ascontiguousarray(channels[..., ch]), coords
        ).reshape(grid.dims)
    return out.reshape(grid.dims + control.shape[3:])


@dataclass(frozen=True)
class SpatialTransform:
    """A sampled forward affine plus a dense backward displacement field."""

    affine: np.ndarray
    displacement: DisplacementField

    def to_record(self) -> dict:
        return {
            "affine": self.affine.tolist(),
        }


def sample_transform(
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    grid: Grid,
    record: dict | None = None,
) -> SpatialTransform:
    """Draw one transform: rotations, scales, translations, shears, and a
    coarse displacement grid upsampled to the volume.

    Zero ranges still consume draws, so the draw sequence is independent of
    the configured magnitudes.
    """
    sp = cfg.spatial
    rotation = rng.uniform(-sp.rotation_deg, sp.rotation_deg, size=3)
    scale = rng.uniform(sp.scale[0], sp.scale[1], size=3)
    translation = rng.uniform(-sp.translation_mm, sp.translation_mm, size=3)
    shear = rng.uniform(-sp.shear, sp.shear, size=3)
    affine = compose_affine(grid.center_world(), rotation, scale, translation, shear)

    d = sp.nonrigid.max_displacement_mm
    control = rng.uniform(-d, d, size=tuple(sp.nonrigid.control_dims) + (3,))
    vectors = upsample_control_grid(control, grid)
    field = DisplacementField(grid, vectors)

    if record is not None:
        record.update(
            {
                "rotation_deg": rotation.tolist(),
                "scale": scale.tolist(),
                "translation_mm": translation.tolist(),
                "shear": shear.tolist(),
                "nonrigid": {
                    "control_dims": list(sp.nonrigid.control_dims),
                    "max_displacement_mm": d,
                    "control_offsets_mm": control.tolist(),
                },
            }
        )
    return SpatialTransform(affine, field)


def transform_coords(grid: Grid, transform: SpatialTransform) -> np.ndarray:
    """Fractional source voxel coordinates for every output voxel."""
    idx = grid.index_coords()
    world = grid.voxel_to_world(idx)
    inv = np.linalg.inv(transform.affine)
    src_world = world @ inv[:3, :3].T + inv[:3, 3]
    src_world = src_world + transform.displacement.vectors.reshape(-1, 3)
    return grid.world_to_voxel(src_world)


def apply_transform(
    obj: Volume | LabelMap, transform: SpatialTransform, interp: str | None = None
) -> Volume | LabelMap:
    """Warp through a sampled transform; grid is preserved."""
    if interp is None:
        interp = "nearest" if isinstance(obj, LabelMap) else "linear"
    _check_interp(obj, interp)
    if not transform.displacement.grid.same_geometry(obj.grid):
        raise ContractError("transform was sampled on a different grid")
    coords = transform_coords(obj.grid, transform)
    return _rebuild(obj, obj.grid, _sample(obj, coords, interp))


def apply_world_affine(
    obj: Volume | LabelMap, affine: np.ndarray, interp: str = "linear"
) -> Volume | LabelMap:
    """Apply a forward world-space affine (no displacement), keeping the grid."""
    _check_interp(obj, interp)
    grid = obj.grid
    mat = np.linalg.inv(grid.affine) @ np.linalg.inv(affine) @ grid.affine
    idx = grid.index_coords()
    coords = idx @ mat[:3, :3].T + mat[:3, 3]
    return _rebuild(obj, grid, _sample(obj, coords, interp))
