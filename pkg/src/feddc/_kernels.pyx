# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``_kernels_py`` holds the numpy equivalents."""

import numpy as np

from libc.math cimport fabs
from libc.stdint cimport int64_t, uint8_t


def radon_nullspace(const double[:, :, ::1] points, double rel_tol=1e-12):
    """Null vector of ``[P^T; 1^T]`` for every ``(r, d)`` block of ``points``.

    Gauss-Jordan elimination with full pivoting. Returns ``(lam, status)``;
    ``status[i] == 1`` marks a rank-deficient block whose row in ``lam`` is
    left at zero for the caller to resolve.
    """
    cdef Py_ssize_t n = points.shape[0], r = points.shape[1], d = points.shape[2]
    cdef Py_ssize_t rows = d + 1, cols = r
    if r != d + 2:
        raise ValueError("each block needs dim + 2 points")
    lam_arr = np.zeros((n, r), dtype=np.float64)
    status_arr = np.zeros(n, dtype=np.int8)
    cdef double[:, ::1] lam = lam_arr
    cdef signed char[::1] status = status_arr
    cdef double[:, ::1] A = np.empty((rows, cols), dtype=np.float64)
    cdef Py_ssize_t[::1] perm = np.empty(cols, dtype=np.intp)
    cdef Py_ssize_t it, i, j, k, pi, pj, rank, free_col
    cdef double scale, best, v, piv, f, tmp
    cdef Py_ssize_t tmpi

    for it in range(n):
        scale = 1.0
        for j in range(cols):
            perm[j] = j
            for i in range(d):
                A[i, j] = points[it, j, i]
                if fabs(A[i, j]) > scale:
                    scale = fabs(A[i, j])
            A[d, j] = 1.0
        rank = 0
        for k in range(rows):
            best = -1.0
            pi = k
            pj = k
            for i in range(k, rows):
                for j in range(k, cols):
                    v = fabs(A[i, j])
                    if v > best:
                        best = v
                        pi = i
                        pj = j
            if best <= rel_tol * scale:
                break
            if pi != k:
                for j in range(cols):
                    tmp = A[k, j]
                    A[k, j] = A[pi, j]
                    A[pi, j] = tmp
            if pj != k:
                for i in range(rows):
                    tmp = A[i, k]
                    A[i, k] = A[i, pj]
                    A[i, pj] = tmp
                tmpi = perm[k]
                perm[k] = perm[pj]
                perm[pj] = tmpi
            piv = A[k, k]
            for j in range(k, cols):
                A[k, j] /= piv
            for i in range(rows):
                if i != k:
                    f = A[i, k]
                    if f != 0.0:
                        for j in range(k, cols):
                            A[i, j] -= f * A[k, j]
            rank += 1
        if rank < rows:
            status[it] = 1
            continue
        free_col = cols - 1
        lam[it, perm[free_col]] = 1.0
        for k in range(rows):
            lam[it, perm[k]] = -A[k, free_col]
    return lam_arr, status_arr


def coverage_hits(const int64_t[:, :, ::1] perms, Py_ssize_t k):
    """For each trial, whether every model's route visits at least ``k``
    distinct clients.

    ``perms[t, s]`` is the permutation of step ``s`` in trial ``t``; the model
    at client ``i`` moves to client ``perms[t, s, i]``.
    """
    cdef Py_ssize_t n = perms.shape[0], steps = perms.shape[1], m = perms.shape[2]
    hits_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] hits = hits_arr
    cdef uint8_t[:, ::1] seen = np.zeros((m, m), dtype=np.uint8)
    cdef Py_ssize_t[::1] pos = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] count = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t t, s, j, c, p
    cdef bint ok

    for t in range(n):
        for j in range(m):
            for c in range(m):
                seen[j, c] = 0
            pos[j] = j
            seen[j, j] = 1
            count[j] = 1
        for s in range(steps):
            for j in range(m):
                p = perms[t, s, pos[j]]
                pos[j] = p
                if not seen[j, p]:
                    seen[j, p] = 1
                    count[j] += 1
        ok = True
        for j in range(m):
            if count[j] < k:
                ok = False
                break
        hits[t] = ok
    return hits_arr.astype(bool)
