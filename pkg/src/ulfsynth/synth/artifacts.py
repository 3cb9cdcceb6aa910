"""K-space artifact simulation: ghosting, spikes, and motion.

Each artifact has a deterministic core working on explicit parameters plus a
sampling wrapper drawing those parameters from the config. Images enter in
[0, 1]; every core inverse-transforms, takes the real part, and re-enters
[0, 1], so a zero-strength artifact is the identity up to FFT round-off.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..volume import Volume
from .config import GhostingConfig, MotionConfig, SpikeConfig
from .transform import apply_world_affine, compose_affine


def _clip_unit(data: np.ndarray) -> np.ndarray:
    return np.clip(data, 0.0, 1.0)


def restore_unit_range(data: np.ndarray) -> np.ndarray:
    """Squeeze back into [0, 1] only as far as the data strays outside it.

    Data already in range passes through identically; otherwise the affine
    map from [min(lo, 0), max(hi, 1)] onto [0, 1] is applied before clipping.
    """
    lo = min(float(data.min()), 0.0)
    hi = max(float(data.max()), 1.0)
    if lo == 0.0 and hi == 1.0:
        return _clip_unit(data)
    return _clip_unit((data - lo) / (hi - lo))


def _signed_freq_index(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n)


def ghost_kspace(
    vol: Volume,
    axis: int,
    num_ghosts: int,
    intensity: float,
    restore_center_fraction: float = 0.06,
) -> Volume:
    """Scale every `num_ghosts`-th k-space plane perpendicular to `axis`.

    Modulated planes are those with index ``k % g == g // 2`` along the
    axis, an offset that leaves the DC plane untouched; planes inside the
    centered low-frequency band of total width ``fraction * n`` are also
    protected. Plane magnitudes scale by (1 - intensity).
    """
    if axis not in (0, 1, 2):
        raise ContractError(f"axis must be 0, 1, or 2, got {axis}")
    if num_ghosts < 2:
        raise ContractError(f"num_ghosts must be >= 2, got {num_ghosts}")
    n = vol.grid.dims[axis]
    k = np.arange(n)
    freq = _signed_freq_index(n)
    protected = np.abs(freq) <= restore_center_fraction * n / 2.0
    modulated = (k % num_ghosts == num_ghosts // 2) & ~protected

    spectrum = np.fft.fftn(vol.data)
    shape = [1, 1, 1]
    shape[axis] = n
    factor = np.where(modulated, 1.0 - intensity, 1.0).reshape(shape)
    out = np.fft.ifftn(spectrum * factor).real
    return Volume(vol.grid, _clip_unit(out))


def apply_ghosting(
    vol: Volume,
    rng: np.random.Generator,
    params: GhostingConfig,
    record: dict | None = None,
) -> Volume:
    axis = int(rng.choice(np.asarray(params.axes, dtype=np.int64)))
    num_ghosts = int(rng.integers(params.num_ghosts[0], params.num_ghosts[1] + 1))
    intensity = float(rng.uniform(params.intensity[0], params.intensity[1]))
    if record is not None:
        record.update({"axis": axis, "num_ghosts": num_ghosts, "intensity": intensity})
    return ghost_kspace(vol, axis, num_ghosts, intensity, params.restore_center_fraction)


def spike_kspace(
    vol: Volume,
    locations: np.ndarray,
    phases: np.ndarray,
    intensity: float,
) -> Volume:
    """Add complex spikes of magnitude ``intensity * max|K|`` at `locations`.

    Locations are integer k-space indices (N, 3); the DC bin is rejected.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=np.int64))
    phases = np.atleast_1d(np.asarray(phases, dtype=np.float64))
    if locations.shape[0] != phases.shape[0]:
        raise ContractError("one phase per spike location is required")
    spectrum = np.fft.fftn(vol.data)
    reference = float(np.abs(spectrum).max())
    for (i, j, k), phase in zip(locations, phases):
        if (i, j, k) == (0, 0, 0):
            raise ContractError("spike at the DC bin would only rescale the image")
        spectrum[i, j, k] += intensity * reference * np.exp(1j * phase)
    out = np.fft.ifftn(spectrum).real
    return Volume(vol.grid, restore_unit_range(out))


def apply_spike(
    vol: Volume,
    rng: np.random.Generator,
    params: SpikeConfig,
    record: dict | None = None,
) -> Volume:
    count = int(rng.integers(params.num_spikes[0], params.num_spikes[1] + 1))
    dims = vol.grid.dims
    locations = []
    while len(locations) < count:
        loc = tuple(int(rng.integers(0, d)) for d in dims)
        if loc != (0, 0, 0):
            locations.append(loc)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    intensity = float(rng.uniform(params.intensity[0], params.intensity[1]))
    if record is not None:
        record.update(
            {
                "locations": [list(l) for l in locations],
                "phases": phases.tolist(),
                "intensity": intensity,
            }
        )
    return spike_kspace(vol, np.asarray(locations), phases, intensity)


def motion_kspace(
    vol: Volume,
    transforms: list[np.ndarray],
    axis: int,
    cuts: list[int],
) -> Volume:
    """Assemble k-space from rigid-motion states along a phase-encode axis.

    The fftshifted spectrum along `axis` is partitioned into len(cuts) + 1
    contiguous blocks at the given cut indices; block 0 comes from the
    unmoved image and block j >= 1 from the image pushed through
    transforms[j-1] (forward world-space rigid affines).
    """
    if axis not in (0, 1, 2):
        raise ContractError(f"axis must be 0, 1, or 2, got {axis}")
    n = vol.grid.dims[axis]
    cuts = sorted(int(c) for c in cuts)
    if len(cuts) != len(transforms):
        raise ContractError("one cut per movement is required")
    if len(set(cuts)) != len(cuts) or any(c < 1 or c > n - 1 for c in cuts):
        raise ContractError(f"cuts must be distinct and inside (0, {n}), got {cuts}")

    spectra = [np.fft.fftshift(np.fft.fftn(vol.data), axes=axis)]
    for affine in transforms:
        moved = apply_world_affine(vol, affine, interp="linear")
        spectra.append(np.fft.fftshift(np.fft.fftn(moved.data), axes=axis))

    bounds = [0] + cuts + [n]
    composite = np.empty_like(spectra[0])
    index: list[slice] = [slice(None)] * 3
    for block, (start, stop) in enumerate(zip(bounds[:-1], bounds[1:])):
        index[axis] = slice(start, stop)
        composite[tuple(index)] = spectra[block][tuple(index)]

    out = np.fft.ifftn(np.fft.ifftshift(composite, axes=axis)).real
    return Volume(vol.grid, _clip_unit(out))


def apply_motion(
    vol: Volume,
    rng: np.random.Generator,
    params: MotionConfig,
    record: dict | None = None,
) -> Volume:
    count = int(rng.integers(params.num_movements[0], params.num_movements[1] + 1))
    center = vol.grid.center_world()
    transforms = []
    sampled = []
    for _ in range(count):
        rotation = rng.uniform(-params.rotation_deg, params.rotation_deg, size=3)
        translation = rng.uniform(-params.translation_mm, params.translation_mm, size=3)
        transforms.append(
            compose_affine(center, rotation, (1.0, 1.0, 1.0), translation, (0.0, 0.0, 0.0))
        )
        sampled.append(
            {"rotation_deg": rotation.tolist(), "translation_mm": translation.tolist()}
        )
    axis = int(rng.integers(0, 3))
    n = vol.grid.dims[axis]
    if n - 1 < count:
        raise ContractError(f"axis of length {n} cannot host {count} k-space cuts")
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, n), size=count, replace=False))
    if record is not None:
        record.update({"axis": axis, "cuts": cuts, "movements": sampled})
    return motion_kspace(vol, transforms, axis, cuts)
