# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scoring kernels.

Single pass per item with float64 accumulators; results are rounded to
float32 once, like the numpy fallback.  The fused kernel folds the query
term and both feedback group means into one sweep over the item matrix.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def dot_scores(const float[:, ::1] mat, const float[::1] query):
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    if query.shape[0] != d:
        raise ValueError("dimension mismatch")
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] ov = out
    cdef Py_ssize_t i, k
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(d):
                acc += <double>mat[i, k] * <double>query[k]
            ov[i] = <float>acc
    return out


def group_mean_scores(const float[:, ::1] mat, const float[:, ::1] group):
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    cdef Py_ssize_t g = group.shape[0]
    if g == 0:
        raise ValueError("group is empty")
    if group.shape[1] != d:
        raise ValueError("dimension mismatch")
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] ov = out
    cdef Py_ssize_t i, j, k
    cdef double acc, dot
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(g):
                dot = 0.0
                for k in range(d):
                    dot += <double>mat[i, k] * <double>group[j, k]
                acc += dot
            ov[i] = <float>(acc / <double>g)
    return out


def feedback_scores(
    const float[:, ::1] cross,
    const float[::1] query,
    const float[:, ::1] uni,
    const float[:, ::1] like,
    const float[:, ::1] dislike,
    double lambda_p,
    double lambda_n,
):
    cdef Py_ssize_t n = cross.shape[0]
    cdef Py_ssize_t d = cross.shape[1]
    cdef Py_ssize_t nl = like.shape[0]
    cdef Py_ssize_t nd = dislike.shape[0]
    if query.shape[0] != d or uni.shape[1] != d or uni.shape[0] != n:
        raise ValueError("dimension mismatch")
    if (nl and like.shape[1] != d) or (nd and dislike.shape[1] != d):
        raise ValueError("dimension mismatch")
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] ov = out
    cdef Py_ssize_t i, j, k
    cdef double total, acc, dot
    with nogil:
        for i in range(n):
            total = 0.0
            for k in range(d):
                total += <double>cross[i, k] * <double>query[k]
            if nl > 0:
                acc = 0.0
                for j in range(nl):
                    dot = 0.0
                    for k in range(d):
                        dot += <double>uni[i, k] * <double>like[j, k]
                    acc += dot
                total += lambda_p * (acc / <double>nl)
            if nd > 0:
                acc = 0.0
                for j in range(nd):
                    dot = 0.0
                    for k in range(d):
                        dot += <double>uni[i, k] * <double>dislike[j, k]
                    acc += dot
                total -= lambda_n * (acc / <double>nd)
            ov[i] = <float>total
    return out
