# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled overlay kernels. Must match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def accumulate_elevation(const cnp.int64_t[:] ix0, const cnp.int64_t[:] ix1,
                         const cnp.int64_t[:] iy0, const cnp.int64_t[:] iy1,
                         const cnp.int64_t[:] heights,
                         Py_ssize_t ncols, Py_ssize_t nrows):
    cdef Py_ssize_t n = heights.shape[0]
    cdef Py_ssize_t k, i, j
    cdef cnp.int64_t h
    diff_arr = np.zeros((nrows + 1, ncols + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] diff = diff_arr
    for k in range(n):
        h = heights[k]
        diff[iy0[k], ix0[k]] += h
        diff[iy0[k], ix1[k]] -= h
        diff[iy1[k], ix0[k]] -= h
        diff[iy1[k], ix1[k]] += h
    out_arr = np.zeros((nrows, ncols), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef cnp.int64_t run
    for j in range(nrows):
        run = 0
        for i in range(ncols):
            run += diff[j, i]
            if j > 0:
                out[j, i] = out[j - 1, i] + run
            else:
                out[j, i] = run
    return out_arr


def label_components(const cnp.uint8_t[:, :] mask, bint wrap_x):
    """4-connected labels of ``mask``; unmasked cells get -1.

    Labels are numbered by the row-major position of each component's first cell.
    """
    cdef Py_ssize_t nrows = mask.shape[0], ncols = mask.shape[1]
    labels_arr = np.full((nrows, ncols), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] labels = labels_arr
    stack_arr = np.empty(max(nrows * ncols, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top, r, c, rr, cc, d, seed_r, seed_c
    cdef cnp.int64_t cur = 0, flat
    cdef int dr[4]
    cdef int dc[4]
    dr[0] = -1; dc[0] = 0
    dr[1] = 1; dc[1] = 0
    dr[2] = 0; dc[2] = -1
    dr[3] = 0; dc[3] = 1
    for seed_r in range(nrows):
        for seed_c in range(ncols):
            if not mask[seed_r, seed_c] or labels[seed_r, seed_c] >= 0:
                continue
            labels[seed_r, seed_c] = cur
            top = 0
            stack[top] = seed_r * ncols + seed_c
            top += 1
            while top > 0:
                top -= 1
                flat = stack[top]
                r = flat // ncols
                c = flat % ncols
                for d in range(4):
                    rr = r + dr[d]
                    cc = c + dc[d]
                    if rr < 0 or rr >= nrows:
                        continue
                    if cc < 0 or cc >= ncols:
                        if not wrap_x or ncols < 2:
                            continue
                        cc = ncols - 1 if cc < 0 else 0
                    if mask[rr, cc] and labels[rr, cc] < 0:
                        labels[rr, cc] = cur
                        stack[top] = rr * ncols + cc
                        top += 1
            cur += 1
    return labels_arr, int(cur)
