# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling and voting kernels.

Arithmetic (corner gathering, blend expressions, rounding rule, tie scans)
must stay identical to ``_pure.py`` so both backends return bit-identical
results.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

ctypedef fused sample_t:
    cnp.float64_t
    cnp.int32_t


def sample_linear(const double[:, :, ::1] volume, const double[:, ::1] coords):
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t n0 = volume.shape[0]
    cdef Py_ssize_t n1 = volume.shape[1]
    cdef Py_ssize_t n2 = volume.shape[2]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, i0, j0, k0, i1, j1, k1
    cdef double c0, c1, c2, f0, f1, f2, t0, t1, t2
    cdef double v000, v100, v010, v110, v001, v101, v011, v111
    cdef double c00, c10, c01, c11, c0_, c1_

    for p in range(n):
        c0 = coords[p, 0]
        c1 = coords[p, 1]
        c2 = coords[p, 2]
        f0 = floor(c0)
        f1 = floor(c1)
        f2 = floor(c2)
        t0 = c0 - f0
        t1 = c1 - f1
        t2 = c2 - f2
        i0 = <Py_ssize_t>f0
        j0 = <Py_ssize_t>f1
        k0 = <Py_ssize_t>f2
        i1 = i0 + 1
        j1 = j0 + 1
        k1 = k0 + 1

        v000 = volume[i0, j0, k0] if (0 <= i0 < n0 and 0 <= j0 < n1 and 0 <= k0 < n2) else 0.0
        v100 = volume[i1, j0, k0] if (0 <= i1 < n0 and 0 <= j0 < n1 and 0 <= k0 < n2) else 0.0
        v010 = volume[i0, j1, k0] if (0 <= i0 < n0 and 0 <= j1 < n1 and 0 <= k0 < n2) else 0.0
        v110 = volume[i1, j1, k0] if (0 <= i1 < n0 and 0 <= j1 < n1 and 0 <= k0 < n2) else 0.0
        v001 = volume[i0, j0, k1] if (0 <= i0 < n0 and 0 <= j0 < n1 and 0 <= k1 < n2) else 0.0
        v101 = volume[i1, j0, k1] if (0 <= i1 < n0 and 0 <= j0 < n1 and 0 <= k1 < n2) else 0.0
        v011 = volume[i0, j1, k1] if (0 <= i0 < n0 and 0 <= j1 < n1 and 0 <= k1 < n2) else 0.0
        v111 = volume[i1, j1, k1] if (0 <= i1 < n0 and 0 <= j1 < n1 and 0 <= k1 < n2) else 0.0

        c00 = v000 * (1.0 - t0) + v100 * t0
        c10 = v010 * (1.0 - t0) + v110 * t0
        c01 = v001 * (1.0 - t0) + v101 * t0
        c11 = v011 * (1.0 - t0) + v111 * t0
        c0_ = c00 * (1.0 - t1) + c10 * t1
        c1_ = c01 * (1.0 - t1) + c11 * t1
        out[p] = c0_ * (1.0 - t2) + c1_ * t2
    return out_arr


def sample_nearest(const sample_t[:, :, ::1] volume, const double[:, ::1] coords):
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t n0 = volume.shape[0]
    cdef Py_ssize_t n1 = volume.shape[1]
    cdef Py_ssize_t n2 = volume.shape[2]
    if sample_t is cnp.float64_t:
        out_arr = np.zeros(n, dtype=np.float64)
    else:
        out_arr = np.zeros(n, dtype=np.int32)
    cdef sample_t[::1] out = out_arr
    cdef Py_ssize_t p, ii, jj, kk

    for p in range(n):
        ii = <Py_ssize_t>floor(coords[p, 0] + 0.5)
        jj = <Py_ssize_t>floor(coords[p, 1] + 0.5)
        kk = <Py_ssize_t>floor(coords[p, 2] + 0.5)
        if 0 <= ii < n0 and 0 <= jj < n1 and 0 <= kk < n2:
            out[p] = volume[ii, jj, kk]
    return out_arr


def vote_argmax(const cnp.int32_t[:, ::1] votes, int num_labels, int tie_break):
    cdef Py_ssize_t n_members = votes.shape[0]
    cdef Py_ssize_t n_voxels = votes.shape[1]
    out_arr = np.empty(n_voxels, dtype=np.int32)
    cdef cnp.int32_t[::1] out = out_arr
    counts_arr = np.zeros(num_labels, dtype=np.int32)
    cdef cnp.int32_t[::1] counts = counts_arr
    cdef Py_ssize_t v, m
    cdef int lab, max_count, best

    for v in range(n_voxels):
        for lab in range(num_labels):
            counts[lab] = 0
        for m in range(n_members):
            counts[votes[m, v]] += 1
        max_count = 0
        for lab in range(num_labels):
            if counts[lab] > max_count:
                max_count = counts[lab]
        best = -1
        if tie_break == 1:
            for lab in range(num_labels):
                if counts[lab] == max_count:
                    best = lab
                    break
        else:
            for m in range(n_members):
                if counts[votes[m, v]] == max_count:
                    best = votes[m, v]
                    break
        out[v] = best
    return out_arr
