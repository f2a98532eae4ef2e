# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Walsh-Hadamard butterflies and support-restricted
matrix-vector products. Mirrors subquad._kernels_py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "compiled"


def fwht_inplace(double[::1] x):
    """In-place Walsh-Hadamard butterfly with unnormalized +-1 entries."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t h = 1
    cdef Py_ssize_t i, j
    cdef double a, b
    while h < n:
        i = 0
        while i < n:
            for j in range(i, i + h):
                a = x[j]
                b = x[j + h]
                x[j] = a + b
                x[j + h] = a - b
            i += 2 * h
        h *= 2


def fwht_inplace_rows(double[:, ::1] a):
    """Row-wise Walsh-Hadamard butterfly on a 2-D array."""
    cdef Py_ssize_t r
    for r in range(a.shape[0]):
        fwht_inplace(a[r])


def colsub_matvec(double[:, ::1] w, long[::1] idx, double[::1] vals):
    """W[:, idx] @ vals without materializing the column subset."""
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t k = idx.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(m)
    cdef double[::1] ov = out
    cdef Py_ssize_t r, j
    cdef double acc
    for r in range(m):
        acc = 0.0
        for j in range(k):
            acc += w[r, idx[j]] * vals[j]
        ov[r] = acc
    return out


def rowsub_matvec(double[:, ::1] w, long[::1] idx, double[::1] vals):
    """W[idx, :].T @ vals: sparse combination of rows of W."""
    cdef Py_ssize_t p = w.shape[1]
    cdef Py_ssize_t k = idx.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(p)
    cdef double[::1] ov = out
    cdef Py_ssize_t r, j, c
    cdef double v
    for j in range(k):
        v = vals[j]
        r = idx[j]
        for c in range(p):
            ov[c] += v * w[r, c]
    return out
