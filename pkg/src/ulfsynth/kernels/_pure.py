"""Numpy fallback kernels.

The arithmetic here (corner gathering, blend expressions, rounding rule,
tie scans) must stay identical to ``_fast.pyx`` so both backends return
bit-identical results.
"""

from __future__ import annotations

import numpy as np


def sample_linear(volume: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinearly sample `volume` at fractional voxel `coords` (N, 3).

    Corners falling outside the volume contribute 0, so values fade to zero
    across the boundary instead of clamping to the edge.
    """
    n0, n1, n2 = volume.shape
    c0 = coords[:, 0]
    c1 = coords[:, 1]
    c2 = coords[:, 2]
    f0 = np.floor(c0)
    f1 = np.floor(c1)
    f2 = np.floor(c2)
    t0 = c0 - f0
    t1 = c1 - f1
    t2 = c2 - f2
    i0 = f0.astype(np.int64)
    j0 = f1.astype(np.int64)
    k0 = f2.astype(np.int64)

    def corner(di: int, dj: int, dk: int) -> np.ndarray:
        ii = i0 + di
        jj = j0 + dj
        kk = k0 + dk
        ok = (ii >= 0) & (ii < n0) & (jj >= 0) & (jj < n1) & (kk >= 0) & (kk < n2)
        vals = np.zeros(coords.shape[0], dtype=np.float64)
        vals[ok] = volume[ii[ok], jj[ok], kk[ok]]
        return vals

    v000 = corner(0, 0, 0)
    v100 = corner(1, 0, 0)
    v010 = corner(0, 1, 0)
    v110 = corner(1, 1, 0)
    v001 = corner(0, 0, 1)
    v101 = corner(1, 0, 1)
    v011 = corner(0, 1, 1)
    v111 = corner(1, 1, 1)

    c00 = v000 * (1.0 - t0) + v100 * t0
    c10 = v010 * (1.0 - t0) + v110 * t0
    c01 = v001 * (1.0 - t0) + v101 * t0
    c11 = v011 * (1.0 - t0) + v111 * t0
    c0_ = c00 * (1.0 - t1) + c10 * t1
    c1_ = c01 * (1.0 - t1) + c11 * t1
    return c0_ * (1.0 - t2) + c1_ * t2


def sample_nearest(volume: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Nearest-neighbour sample; rounding rule is floor(x + 0.5) on every axis.

    Out-of-bounds points yield 0 (cast to the volume dtype).
    """
    n0, n1, n2 = volume.shape
    ii = np.floor(coords[:, 0] + 0.5).astype(np.int64)
    jj = np.floor(coords[:, 1] + 0.5).astype(np.int64)
    kk = np.floor(coords[:, 2] + 0.5).astype(np.int64)
    ok = (ii >= 0) & (ii < n0) & (jj >= 0) & (jj < n1) & (kk >= 0) & (kk < n2)
    out = np.zeros(coords.shape[0], dtype=volume.dtype)
    out[ok] = volume[ii[ok], jj[ok], kk[ok]]
    return out


def vote_argmax(votes: np.ndarray, num_labels: int, tie_break: int) -> np.ndarray:
    """Per-voxel plurality over `votes` (members, voxels) of compact label ids.

    tie_break 0: among tied labels, take the one voted by the earliest member.
    tie_break 1: among tied labels, take the smallest label id.
    """
    n_members, n_voxels = votes.shape
    counts = np.zeros((num_labels, n_voxels), dtype=np.int32)
    cols = np.arange(n_voxels)
    for m in range(n_members):
        counts[votes[m], cols] += 1
    max_count = counts.max(axis=0)

    if tie_break == 1:
        # argmax over the boolean tie mask returns the first (lowest) tied id
        return np.argmax(counts == max_count, axis=0).astype(np.int32)

    out = np.full(n_voxels, -1, dtype=np.int32)
    for m in range(n_members):
        lab = votes[m]
        sel = (out < 0) & (counts[lab, cols] == max_count)
        out[sel] = lab[sel]
    return out
