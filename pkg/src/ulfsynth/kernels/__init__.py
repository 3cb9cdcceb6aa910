"""Hot sampling and voting kernels: compiled core with a numpy fallback.

The compiled extension (``_fast``, built from Cython) and the numpy fallback
(``_pure``) implement the same arithmetic in the same association order, so
their outputs are bit-identical; ``benchmarks/bench_kernels.py`` compares
their speed. Set ``ULFSYNTH_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("ULFSYNTH_PURE", "0") not in ("", "0"):
    from . import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _pure as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

TIE_FIRST_MEMBER = 0
TIE_LOWEST_LABEL = 1


def _as_coords(coords: np.ndarray) -> np.ndarray:
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError("coords must have shape (N, 3)")
    return coords


def sample_linear(volume: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinear sampling of a 3-D float64 array at voxel coordinates.

    Out-of-bounds corners contribute 0. Returns float64 of length N.
    """
    volume = np.ascontiguousarray(volume, dtype=np.float64)
    return np.asarray(_impl.sample_linear(volume, _as_coords(coords)))


def sample_nearest(volume: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Nearest-neighbour sampling (floor(x + 0.5)); out of bounds yields 0.

    Accepts float64 or int32 volumes and preserves the dtype.
    """
    if volume.dtype == np.int32:
        volume = np.ascontiguousarray(volume)
    else:
        volume = np.ascontiguousarray(volume, dtype=np.float64)
    return np.asarray(_impl.sample_nearest(volume, _as_coords(coords)))


def vote_argmax(votes: np.ndarray, num_labels: int, tie_break: int) -> np.ndarray:
    """Per-voxel plurality vote over compact label ids in [0, num_labels).

    `votes` has shape (members, voxels), int32. Ties resolve per `tie_break`
    (TIE_FIRST_MEMBER or TIE_LOWEST_LABEL).
    """
    votes = np.ascontiguousarray(votes, dtype=np.int32)
    if votes.ndim != 2:
        raise ValueError("votes must have shape (members, voxels)")
    if tie_break not in (TIE_FIRST_MEMBER, TIE_LOWEST_LABEL):
        raise ValueError(f"unknown tie_break code {tie_break}")
    if votes.size and (votes.min() < 0 or votes.max() >= num_labels):
        raise ValueError("vote ids must lie in [0, num_labels)")
    return np.asarray(_impl.vote_argmax(votes, num_labels, tie_break))
