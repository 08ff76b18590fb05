# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: split search, tree traversal, k-NN selection.

Mirrors ``_fallback`` operation-for-operation; see that module for the
contracts. The split search and tree traversal reproduce the fallback's
results bitwise (same accumulation order, same IEEE expressions, same tie
rules); k-NN uses an exact per-dimension loop where the fallback uses a
BLAS expansion, so distances may differ in the last ulps.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()

NAME = "compiled"


cdef struct ValIdx:
    double val
    Py_ssize_t idx


cdef int _cmp_validx(const void* pa, const void* pb) noexcept nogil:
    # Orders by value, then original index: equivalent to a stable sort.
    cdef const ValIdx* a = <const ValIdx*> pa
    cdef const ValIdx* b = <const ValIdx*> pb
    if a.val < b.val:
        return -1
    if a.val > b.val:
        return 1
    if a.idx < b.idx:
        return -1
    if a.idx > b.idx:
        return 1
    return 0


def best_split(double[:, ::1] x, double[::1] g, double[::1] h,
               double l2_lambda, double min_child_weight):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t n_feat = x.shape[1]
    if m < 2:
        return None

    cdef double g_total = 0.0
    cdef double h_total = 0.0
    cdef Py_ssize_t i, j
    for i in range(m):
        g_total += g[i]
    for i in range(m):
        h_total += h[i]
    cdef double parent = g_total * g_total / (h_total + l2_lambda)

    cdef double best_gain = 0.0
    cdef double best_thr = 0.0
    cdef Py_ssize_t best_feat = -1

    cdef ValIdx* pairs = <ValIdx*> malloc(m * sizeof(ValIdx))
    if pairs == NULL:
        raise MemoryError()

    cdef double gl, hl, gr, hr, gain, v0, v1
    cdef Py_ssize_t idx
    try:
        for j in range(n_feat):
            for i in range(m):
                pairs[i].val = x[i, j]
                pairs[i].idx = i
            qsort(pairs, m, sizeof(ValIdx), _cmp_validx)
            gl = 0.0
            hl = 0.0
            for i in range(m - 1):
                idx = pairs[i].idx
                gl = gl + g[idx]
                hl = hl + h[idx]
                v0 = pairs[i].val
                v1 = pairs[i + 1].val
                if v0 < v1:
                    gr = g_total - gl
                    hr = h_total - hl
                    if hl >= min_child_weight and hr >= min_child_weight:
                        gain = (gl * gl / (hl + l2_lambda)
                                + gr * gr / (hr + l2_lambda)
                                - parent)
                        if gain > best_gain:
                            best_gain = gain
                            best_feat = j
                            best_thr = (v0 + v1) / 2.0
    finally:
        free(pairs)

    if best_feat < 0:
        return None
    return best_gain, int(best_feat), best_thr


def tree_leaf_values(int[::1] feature, double[::1] threshold,
                     int[::1] left, int[::1] right, double[::1] value,
                     double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i
    cdef int node, f
    for i in range(n):
        node = 0
        f = feature[node]
        while f >= 0:
            if x[i, f] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
            f = feature[node]
        out_v[i] = value[node]
    return out


def knn(points, k, chunk=512):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] p = pts
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t d = p.shape[1]
    cdef Py_ssize_t kk = k
    if kk < 1 or kk >= n:
        raise ValueError("knn requires 1 <= k <= n-1")

    ids = np.empty((n, kk), dtype=np.int64)
    dists = np.empty((n, kk), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] ids_v = ids
    cdef double[:, ::1] dist_v = dists

    cdef double* best_d = <double*> malloc(kk * sizeof(double))
    cdef Py_ssize_t* best_i = <Py_ssize_t*> malloc(kk * sizeof(Py_ssize_t))
    if best_d == NULL or best_i == NULL:
        free(best_d)
        free(best_i)
        raise MemoryError()

    cdef Py_ssize_t i, j, q, pos, cnt
    cdef double s, diff
    try:
        for i in range(n):
            cnt = 0
            for j in range(n):
                if j == i:
                    continue
                s = 0.0
                for q in range(d):
                    diff = p[i, q] - p[j, q]
                    s += diff * diff
                if cnt == kk:
                    # (s, j) never beats an equal-distance entry: j grows
                    # monotonically during the scan.
                    if s >= best_d[kk - 1]:
                        continue
                    pos = kk - 1
                else:
                    pos = cnt
                    cnt += 1
                while pos > 0 and s < best_d[pos - 1]:
                    best_d[pos] = best_d[pos - 1]
                    best_i[pos] = best_i[pos - 1]
                    pos -= 1
                best_d[pos] = s
                best_i[pos] = j
            for q in range(kk):
                ids_v[i, q] = best_i[q]
                dist_v[i, q] = sqrt(best_d[q])
    finally:
        free(best_d)
        free(best_i)
    return ids, dists
