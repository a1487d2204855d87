# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-key pinching loop.

Same contracts as ``qextrap._pykernels``.
"""

import numpy as np
cimport cython
from libc.math cimport fabs


cdef inline double _quad_diag(const double complex[:, :, ::1] u, Py_ssize_t k, Py_ssize_t x,
                              const double complex[:, ::1] m, Py_ssize_t n) noexcept nogil:
    # Re <x| U m U^dag |x> = Re sum_ij U[x,i] m[i,j] conj(U[x,j])
    cdef Py_ssize_t i, j
    cdef double complex row, ui
    cdef double acc = 0.0
    for j in range(n):
        row = 0
        for i in range(n):
            row = row + u[k, x, i] * m[i, j]
        ui = u[k, x, j]
        acc += row.real * ui.real + row.imag * ui.imag
    return acc


def pinch_distribution_batch(unitaries, rho):
    cdef const double complex[:, :, ::1] u = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef const double complex[:, ::1] m = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef Py_ssize_t nk = u.shape[0], n = u.shape[1], k, x
    out = np.empty((nk, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(nk):
            for x in range(n):
                o[k, x] = _quad_diag(u, k, x, m, n)
    return out


def pinch_td_batch(unitaries, delta):
    cdef const double complex[:, :, ::1] u = np.ascontiguousarray(unitaries, dtype=np.complex128)
    cdef const double complex[:, ::1] m = np.ascontiguousarray(delta, dtype=np.complex128)
    cdef Py_ssize_t nk = u.shape[0], n = u.shape[1], k, x
    cdef double acc
    out = np.empty(nk, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(nk):
            acc = 0.0
            for x in range(n):
                acc += fabs(_quad_diag(u, k, x, m, n))
            o[k] = 0.5 * acc
    return out


def half_l1_rows(p, q):
    cdef const double[:, ::1] a = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t nr = a.shape[0], n = a.shape[1], r, x
    cdef double acc
    out = np.empty(nr, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for r in range(nr):
            acc = 0.0
            for x in range(n):
                acc += fabs(a[r, x] - b[r, x])
            o[r] = 0.5 * acc
    return out
