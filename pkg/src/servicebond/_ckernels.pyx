# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled merge-walk kernels for sampling piecewise-constant signals.

Both inputs to every kernel are sorted, so a single forward pass over the
segment starts serves all timestamps.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def segment_index(const double[::1] starts, const double[::1] ts):
    """Index of the segment holding each timestamp (right-continuous)."""
    cdef Py_ssize_t n = starts.shape[0]
    cdef Py_ssize_t m = ts.shape[0]
    cdef Py_ssize_t i, j = 0
    out = np.empty(m, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = out
    for i in range(m):
        while j + 1 < n and starts[j + 1] <= ts[i]:
            j += 1
        idx[i] = j
    return out


def under_counts(const double[::1] starts, const double[:, ::1] values,
                 const double[::1] ts, const double[::1] ref,
                 const double[::1] sign):
    """Per-metric count of samples where sign * (ref - value) > 0."""
    cdef Py_ssize_t n = starts.shape[0]
    cdef Py_ssize_t m = ts.shape[0]
    cdef Py_ssize_t k = ref.shape[0]
    cdef Py_ssize_t i, c, j = 0
    out = np.zeros(k, dtype=np.int64)
    cdef long long[::1] counts = out
    for i in range(m):
        while j + 1 < n and starts[j + 1] <= ts[i]:
            j += 1
        for c in range(k):
            if sign[c] * (ref[c] - values[j, c]) > 0.0:
                counts[c] += 1
    return out


def step_counts(const double[:, ::1] delivered, const double[::1] ref,
                const double[::1] sign):
    """Per-metric count of rows where sign * (ref - delivered) > 0."""
    cdef Py_ssize_t m = delivered.shape[0]
    cdef Py_ssize_t k = ref.shape[0]
    cdef Py_ssize_t i, c
    out = np.zeros(k, dtype=np.int64)
    cdef long long[::1] counts = out
    for i in range(m):
        for c in range(k):
            if sign[c] * (ref[c] - delivered[i, c]) > 0.0:
                counts[c] += 1
    return out
