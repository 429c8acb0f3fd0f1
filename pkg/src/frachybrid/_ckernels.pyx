# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Grünwald-Letnikov history sums and complex LU
log-determinants over a frequency sweep."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY
from libc.complex cimport cabs

cnp.import_array()

ctypedef double complex cplx


def gl_history_sum(const double[::1] weights, const double[:, ::1] dev,
                   Py_ssize_t k, Py_ssize_t memory):
    cdef Py_ssize_t n = dev.shape[1]
    cdef Py_ssize_t m = k if (memory <= 0 or memory > k) else memory
    cdef Py_ssize_t j, i, row
    cdef double c
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] acc = out
    for j in range(1, m + 1):
        c = weights[j]
        if c == 0.0:
            continue
        row = k - j
        for i in range(n):
            acc[i] += c * dev[row, i]
    return out


cdef inline double _mag2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _lu_logdet(cplx[:, ::1] a, Py_ssize_t n, cplx* unit, double* logabs) noexcept nogil:
    cdef Py_ssize_t i, j, r, piv
    cdef double best, mag
    cdef cplx tmp, f, inv, u = 1.0
    cdef double la = 0.0
    for j in range(n):
        # pivot on squared magnitude; only the chosen pivot needs |.|
        piv = j
        best = _mag2(a[j, j])
        for r in range(j + 1, n):
            mag = _mag2(a[r, j])
            if mag > best:
                best = mag
                piv = r
        if best == 0.0:
            unit[0] = 0.0
            logabs[0] = -INFINITY
            return
        if piv != j:
            for i in range(n):
                tmp = a[j, i]
                a[j, i] = a[piv, i]
                a[piv, i] = tmp
            u = -u
        mag = cabs(a[j, j])
        u = u * (a[j, j] / mag)
        la += log(mag)
        inv = 1.0 / a[j, j]
        for r in range(j + 1, n):
            f = a[r, j] * inv
            if f == 0.0:
                continue
            for i in range(j + 1, n):
                a[r, i] = a[r, i] - f * a[j, i]
    unit[0] = u / cabs(u)
    logabs[0] = la


def complex_logdet(M):
    a = np.array(M, dtype=np.complex128, order="C", copy=True)
    cdef cplx[:, ::1] view = a
    cdef cplx unit
    cdef double logabs
    _lu_logdet(view, a.shape[0], &unit, &logabs)
    return complex(unit), float(logabs)


def pencil_logdet(M0, M1, M2, const double[::1] omegas):
    """log-determinant of M0 + w*M1 + w**2*M2 for every w in ``omegas``."""
    c0 = np.ascontiguousarray(M0, dtype=np.complex128)
    c1 = np.ascontiguousarray(M1, dtype=np.complex128)
    c2 = np.ascontiguousarray(M2, dtype=np.complex128)
    cdef cplx[:, ::1] v0 = c0
    cdef cplx[:, ::1] v1 = c1
    cdef cplx[:, ::1] v2 = c2
    cdef Py_ssize_t n = c0.shape[0]
    cdef Py_ssize_t npts = omegas.shape[0]
    units = np.empty(npts, dtype=np.complex128)
    logs = np.empty(npts, dtype=np.float64)
    cdef cplx[::1] uv = units
    cdef double[::1] lv = logs
    work = np.empty((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] wv = work
    cdef Py_ssize_t k, i, j
    cdef double w, w2
    cdef cplx unit
    cdef double la
    with nogil:
        for k in range(npts):
            w = omegas[k]
            w2 = w * w
            for i in range(n):
                for j in range(n):
                    wv[i, j] = v0[i, j] + w * v1[i, j] + w2 * v2[i, j]
            _lu_logdet(wv, n, &unit, &la)
            uv[k] = unit
            lv[k] = la
    return units, logs
