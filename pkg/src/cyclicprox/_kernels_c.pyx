# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise point-set kernels. Mirrors ``_kernels_py``."""
import numpy as np
from libc.math cimport sqrt, INFINITY


cdef inline double _sq(const double[:, ::1] X, const double[:, ::1] Y,
                       Py_ssize_t i, Py_ssize_t j, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    for k in range(d):
        t = X[i, k] - Y[j, k]
        acc += t * t
    return acc


def pairwise(const double[:, ::1] X, const double[:, ::1] Y):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j
    out = np.empty((n, m))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = sqrt(_sq(X, Y, i, j, d))
    return out


def row_min(const double[:, ::1] X, const double[:, ::1] Y):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef double best, s
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            best = INFINITY
            for j in range(m):
                s = _sq(X, Y, i, j, d)
                if s < best:
                    best = s
            o[i] = sqrt(best)
    return out


def pair_extrema(const double[:, ::1] X, const double[:, ::1] Y):
    cdef Py_ssize_t n = X.shape[0], m = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef double lo = INFINITY, hi = 0.0, s
    with nogil:
        for i in range(n):
            for j in range(m):
                s = _sq(X, Y, i, j, d)
                if s < lo:
                    lo = s
                if s > hi:
                    hi = s
    return sqrt(lo), sqrt(hi)
