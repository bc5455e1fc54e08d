# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: blade products, Neumann partial sums, Jackson lattice sums.

Mirrors ``_kernels_py`` exactly in signature and summation order.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport hypot, isfinite

cnp.import_array()


cdef inline int _popcount(unsigned long x) nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


cdef inline int _sign(unsigned long a, unsigned long b, unsigned long neg_mask) nogil:
    cdef int swaps = 0
    cdef unsigned long x = a >> 1
    while x:
        swaps += _popcount(x & b)
        x >>= 1
    swaps += _popcount(a & b & neg_mask)
    return -1 if (swaps & 1) else 1


def blade_sign(unsigned long a, unsigned long b, unsigned long neg_mask):
    return _sign(a, b, neg_mask)


def gp_dense(const double complex[::1] a, const double complex[::1] b, unsigned long neg_mask):
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t i, j
    out_arr = np.zeros(size, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex ai
    with nogil:
        for i in range(size):
            ai = a[i]
            if ai.real == 0.0 and ai.imag == 0.0:
                continue
            for j in range(size):
                if b[j].real == 0.0 and b[j].imag == 0.0:
                    continue
                out[i ^ j] = out[i ^ j] + _sign(i, j, neg_mask) * ai * b[j]
    return out_arr


cdef void _matmul(double complex[:, ::1] x, double complex[:, ::1] y,
                  double complex[:, ::1] out, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + x[i, k] * y[k, j]
            out[i, j] = acc


def neumann_sum(m_in, double stop_norm, long max_terms):
    cdef double complex[:, ::1] m = np.ascontiguousarray(m_in, dtype=np.complex128)
    cdef Py_ssize_t n = m.shape[0]
    total_arr = np.eye(n, dtype=np.complex128)
    term_arr = np.eye(n, dtype=np.complex128)
    nxt_arr = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] total = total_arr
    cdef double complex[:, ::1] term = term_arr
    cdef double complex[:, ::1] nxt = nxt_arr
    cdef double complex[:, ::1] tmp
    cdef long used = 1
    cdef long step
    cdef double last = 1.0 if n else 0.0
    cdef double mag
    cdef Py_ssize_t i, j
    with nogil:
        for step in range(1, max_terms):
            _matmul(term, m, nxt, n)
            last = 0.0
            for i in range(n):
                for j in range(n):
                    total[i, j] = total[i, j] + nxt[i, j]
                    mag = hypot(nxt[i, j].real, nxt[i, j].imag)
                    if mag > last or not isfinite(mag):
                        last = mag
            tmp = term
            term = nxt
            nxt = tmp
            if last < stop_norm:
                break
            if not isfinite(last):
                used += 1
                break
            used += 1
    return total_arr, used, last


def jackson_sum(values_in, double complex x0, double q):
    cdef double complex[:, ::1] values = np.ascontiguousarray(values_in, dtype=np.complex128)
    cdef Py_ssize_t rows = values.shape[0]
    cdef Py_ssize_t cols = values.shape[1]
    out_arr = np.zeros(cols, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex weight = x0
    cdef Py_ssize_t k, c
    with nogil:
        for k in range(rows):
            for c in range(cols):
                out[c] = out[c] + weight * values[k, c]
            weight = weight * q
        for c in range(cols):
            out[c] = (1.0 - q) * out[c]
    return out_arr
