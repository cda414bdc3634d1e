# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scans for Lipschitz safe-set growth and expander counting.

Semantics match ``fallback.py`` exactly; see the docstrings there.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lipschitz_expand(const double[:, ::1] lower, const double[:, ::1] dist,
                     const double[::1] lipschitz, const double[::1] thresholds,
                     const cnp.uint8_t[::1] safe_prev):
    cdef Py_ssize_t n_fn = lower.shape[0]
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t i, xp, xs
    cdef bint found
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_arr
    safe_idx_arr = np.flatnonzero(np.asarray(safe_prev)).astype(np.intp)
    cdef Py_ssize_t[::1] safe_idx = safe_idx_arr
    cdef Py_ssize_t n_safe = safe_idx.shape[0]
    cdef Py_ssize_t s

    for xp in range(n):
        if safe_prev[xp]:
            out[xp] = 1
            continue
        found = True
        for i in range(n_fn):
            found = False
            for s in range(n_safe):
                xs = safe_idx[s]
                if lower[i, xs] - lipschitz[i] * dist[xs, xp] >= thresholds[i]:
                    found = True
                    break
            if not found:
                break
        if found:
            out[xp] = 1
    return out_arr.astype(bool)


def expander_counts(const double[:, ::1] upper, const double[:, ::1] dist,
                    const double[::1] lipschitz, const double[::1] thresholds,
                    const cnp.uint8_t[::1] safe, bint count_all=False):
    cdef Py_ssize_t n_fn = upper.shape[0]
    cdef Py_ssize_t n = dist.shape[0]
    cdef Py_ssize_t i, x, xp
    cdef bint ok
    cdef long long c
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] counts = counts_arr

    for x in range(n):
        if not safe[x]:
            continue
        c = 0
        for xp in range(n):
            if safe[xp]:
                continue
            ok = True
            for i in range(n_fn):
                if upper[i, x] - lipschitz[i] * dist[x, xp] < thresholds[i]:
                    ok = False
                    break
            if ok:
                c += 1
                if not count_all:
                    break
        counts[x] = c
    return counts_arr
