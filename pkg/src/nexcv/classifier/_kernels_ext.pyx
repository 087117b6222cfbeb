# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loss/gradient and scoring kernels for the multinomial logistic model.

Documents arrive as CSR triples (indptr, indices, data). The weight matrix is
(n_classes, n_features), C-contiguous.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


cdef inline void _scores(const double[:, ::1] W, const double[::1] b,
                         const long[::1] indices, const double[::1] data,
                         long start, long stop, double* z) noexcept nogil:
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t c
    cdef long j
    for c in range(C):
        z[c] = b[c]
    for j in range(start, stop):
        for c in range(C):
            z[c] += data[j] * W[c, indices[j]]


cdef inline double _softmax_inplace(double* z, Py_ssize_t C) noexcept nogil:
    """Turn scores into probabilities; returns log of the normalizer."""
    cdef double m = z[0]
    cdef double s = 0.0
    cdef Py_ssize_t c
    for c in range(1, C):
        if z[c] > m:
            m = z[c]
    for c in range(C):
        z[c] = exp(z[c] - m)
        s += z[c]
    for c in range(C):
        z[c] /= s
    return m + log(s)


def loss_grad(const long[::1] indptr, const long[::1] indices, const double[::1] data,
              const long[::1] y, const double[:, ::1] W, const double[::1] b):
    """Summed negative log-likelihood and its gradients (unregularized, unaveraged)."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t C = W.shape[0]
    cdef Py_ssize_t F = W.shape[1]
    gW_arr = np.zeros((C, F), dtype=np.float64)
    gb_arr = np.zeros(C, dtype=np.float64)
    z_arr = np.empty(C, dtype=np.float64)
    cdef double[:, ::1] gW = gW_arr
    cdef double[::1] gb = gb_arr
    cdef double[::1] zv = z_arr
    cdef double* z = &zv[0]
    cdef double loss = 0.0
    cdef double lse, r
    cdef Py_ssize_t i, c
    cdef long j
    with nogil:
        for i in range(n):
            _scores(W, b, indices, data, indptr[i], indptr[i + 1], z)
            lse = z[y[i]]
            lse = _softmax_inplace(z, C) - lse
            loss += lse
            z[y[i]] -= 1.0
            for c in range(C):
                r = z[c]
                gb[c] += r
                for j in range(indptr[i], indptr[i + 1]):
                    gW[c, indices[j]] += r * data[j]
    return loss, gW_arr, gb_arr


def predict_proba(const long[::1] indptr, const long[::1] indices, const double[::1] data,
                  const double[:, ::1] W, const double[::1] b):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t C = W.shape[0]
    out_arr = np.empty((n, C), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _scores(W, b, indices, data, indptr[i], indptr[i + 1], &out[i, 0])
            _softmax_inplace(&out[i, 0], C)
    return out_arr
