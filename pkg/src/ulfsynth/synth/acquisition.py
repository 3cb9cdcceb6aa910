"""Thick-slice acquisition simulation on an isotropic 1 mm grid.

One axis plays the slice direction: the image is blurred along it with a
Gaussian whose FWHM equals the slice thickness (sigma = thickness / 2.355),
resampled down to that thickness, then resampled back to the original grid.
Only the image passes through this stage; labels stay on the original grid.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..errors import ContractError
from ..resample import resample
from ..volume import Grid, Volume
from .config import GeneratorConfig

FWHM_FACTOR = 2.355
_ISO_TOL = 1e-3


def slab_resample(vol: Volume, axis: int, thickness_mm: float) -> tuple[Volume, Grid]:
    """Blur + downsample + upsample along `axis`; returns (output, coarse grid).

    The coarse grid keeps the origin and direction, scales the axis column
    to the slice thickness, and spans ceil(extent / thickness) slices.
    """
    if axis not in (0, 1, 2):
        raise ContractError(f"axis must be 0, 1, or 2, got {axis}")
    if thickness_mm <= 0:
        raise ContractError(f"slice thickness must be positive, got {thickness_mm}")
    spacing = vol.grid.spacing
    if max(abs(s - 1.0) for s in spacing) > _ISO_TOL:
        raise ContractError(
            f"acquisition simulation requires an isotropic 1 mm grid, got spacing {spacing}"
        )

    sigma_vox = (thickness_mm / FWHM_FACTOR) / spacing[axis]
    blurred = ndimage.gaussian_filter1d(vol.data, sigma=sigma_vox, axis=axis, mode="nearest")

    n = vol.grid.dims[axis]
    n_coarse = math.ceil(n * spacing[axis] / thickness_mm - 1e-9)
    scale = thickness_mm / spacing[axis]
    affine = np.array(vol.grid.affine)
    affine[:3, axis] *= scale
    dims = list(vol.grid.dims)
    dims[axis] = n_coarse
    coarse_grid = Grid.from_affine(tuple(dims), affine)

    coarse = resample(Volume(vol.grid, blurred), coarse_grid, "linear")
    out = resample(coarse, vol.grid, "linear")
    return out, coarse_grid


def simulate_acquisition(
    vol: Volume,
    rng: np.random.Generator,
    cfg: GeneratorConfig,
    record: dict | None = None,
) -> Volume:
    """Sample a slice axis and thickness from the config, then slab-resample."""
    axis = int(rng.integers(0, 3))
    lo, hi = cfg.resolution.slice_thickness_mm
    thickness = float(rng.uniform(lo, hi))
    out, coarse_grid = slab_resample(vol, axis, thickness)
    if record is not None:
        record.update(
            {
                "axis": axis,
                "slice_thickness_mm": thickness,
                "coarse_dims": list(coarse_grid.dims),
            }
        )
    return out
