# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see _numpy.py for the reference semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def decode_insertion_codes(object order_obj, object codes_obj):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order = np.ascontiguousarray(order_obj, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] codes = np.ascontiguousarray(codes_obj, dtype=np.int64)
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t m = order.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ranks = np.zeros((n, m), dtype=np.int64)
    cdef Py_ssize_t row, t, s
    cdef cnp.int64_t k, item, r
    for row in range(n):
        ranks[row, order[0]] = 1
        for t in range(2, m + 1):
            k = codes[row, t - 2]
            for s in range(t - 1):
                item = order[s]
                r = ranks[row, item]
                if r > k:
                    ranks[row, item] = r + 1
            ranks[row, order[t - 1]] = k + 1
    return ranks


def concordance_counts(object ref_obj, object batch_obj):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ref = np.ascontiguousarray(ref_obj, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] batch = np.ascontiguousarray(batch_obj, dtype=np.int64)
    cdef Py_ssize_t n = batch.shape[0]
    cdef Py_ssize_t m = ref.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t row, i, j
    cdef cnp.int64_t acc
    for row in range(n):
        acc = 0
        for i in range(m):
            for j in range(i + 1, m):
                if (ref[i] - ref[j]) * (batch[row, i] - batch[row, j]) > 0:
                    acc += 1
        out[row] = acc
    return out


def pair_greater_counts(object batch_obj):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] batch = np.ascontiguousarray(batch_obj, dtype=np.int64)
    cdef Py_ssize_t n = batch.shape[0]
    cdef Py_ssize_t m = batch.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] counts = np.zeros((m, m), dtype=np.int64)
    cdef Py_ssize_t row, i, j
    for row in range(n):
        for i in range(m):
            for j in range(m):
                if batch[row, i] > batch[row, j]:
                    counts[i, j] += 1
    return counts
