# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics must match ``_fallback`` exactly."""

import numpy as np

from libc.math cimport fabs

ctypedef long long i64


def ergodic_coefficient(const double[:, ::1] M):
    cdef Py_ssize_t n = M.shape[0], k = M.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double s, best = 0.0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                s = 0.0
                for c in range(k):
                    s += fabs(M[i, c] - M[j, c])
                if s > best:
                    best = s
    return 0.5 * best


def advance_walkers(i64[::1] states, const double[:, ::1] cum,
                    const double[::1] u, const i64[::1] block_of,
                    i64[::1] counts):
    cdef Py_ssize_t w, nw = states.shape[0]
    cdef Py_ssize_t n = cum.shape[1]
    cdef Py_ssize_t lo, hi, mid
    cdef i64 s
    cdef double x
    if u.shape[0] != nw:
        raise ValueError("one uniform draw per walker is required")
    with nogil:
        for w in range(nw):
            s = states[w]
            x = u[w]
            lo = 0
            hi = n - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if cum[s, mid] > x:
                    hi = mid
                else:
                    lo = mid + 1
            states[w] = lo
            counts[block_of[lo]] += 1
