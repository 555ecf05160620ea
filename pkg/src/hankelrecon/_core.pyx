# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Hankel kernels.

Small products run as direct loops over the generating vector, with complex
data split into planar real/imaginary arrays so the inner axpy loops
vectorize. Above ``DIRECT_CUTOFF`` multiply-adds a BLAS product wins, so the
Hankel copy is built here and handed to BLAS, and the anti-diagonal
reduction stays compiled. Signatures and results match
``hankelrecon._fallback``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

# n1 * n2 * rank above which BLAS beats the direct loops
DIRECT_CUTOFF = 16384


cdef inline Py_ssize_t _count(Py_ssize_t k, Py_ssize_t n1, Py_ssize_t n2) noexcept nogil:
    cdef Py_ssize_t c = k + 1
    if n1 < c:
        c = n1
    if n2 < c:
        c = n2
    if n1 + n2 - 1 - k < c:
        c = n1 + n2 - 1 - k
    return c


def _planar(a):
    a = np.asarray(a, dtype=np.complex128)
    return np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag)


def hankel_matrix(x, Py_ssize_t n1):
    cdef const cplx[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n2 = xv.shape[0] - n1 + 1
    out = np.empty((n1, n2), dtype=np.complex128)
    cdef cplx[:, ::1] ov = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n1):
            for j in range(n2):
                ov[i, j] = xv[i + j]
    return out


def hankel_times(x, q, Py_ssize_t n1):
    """``H(x) @ q`` for a Hankel matrix with ``n1`` rows."""
    q = np.asarray(q)
    if n1 * q.shape[0] * q.shape[1] > DIRECT_CUTOFF:
        return hankel_matrix(x, n1) @ q
    return _hankel_times_direct(x, q, n1)


def _hankel_times_direct(x, q, Py_ssize_t n1):
    xr_a, xi_a = _planar(x)
    qr_a, qi_a = _planar(q)
    cdef const double[::1] xr = xr_a
    cdef const double[::1] xi = xi_a
    cdef const double[:, ::1] qr = qr_a
    cdef const double[:, ::1] qi = qi_a
    cdef Py_ssize_t n2 = qr.shape[0]
    cdef Py_ssize_t rank = qr.shape[1]
    out_r = np.zeros((rank, n1))
    out_i = np.zeros((rank, n1))
    cdef double[:, ::1] orr = out_r
    cdef double[:, ::1] oii = out_i
    cdef Py_ssize_t i, j, r
    cdef double cr, ci
    with nogil:
        for r in range(rank):
            for j in range(n2):
                cr = qr[j, r]
                ci = qi[j, r]
                for i in range(n1):
                    orr[r, i] += xr[i + j] * cr - xi[i + j] * ci
                    oii[r, i] += xr[i + j] * ci + xi[i + j] * cr
    return (out_r + 1j * out_i).T.copy()


def hankel_h_times(x, p, Py_ssize_t n2):
    """``H(x)^H @ p`` for a Hankel matrix with ``n2`` columns."""
    p = np.asarray(p)
    if n2 * p.shape[0] * p.shape[1] > DIRECT_CUTOFF:
        return hankel_matrix(np.conj(x), p.shape[0]).T @ p
    return _hankel_h_times_direct(x, p, n2)


def _hankel_h_times_direct(x, p, Py_ssize_t n2):
    xr_a, xi_a = _planar(x)
    pr_a, pi_a = _planar(p)
    cdef const double[::1] xr = xr_a
    cdef const double[::1] xi = xi_a
    cdef const double[:, ::1] pr = pr_a
    cdef const double[:, ::1] pim = pi_a
    cdef Py_ssize_t n1 = pr.shape[0]
    cdef Py_ssize_t rank = pr.shape[1]
    out_r = np.zeros((rank, n2))
    out_i = np.zeros((rank, n2))
    cdef double[:, ::1] orr = out_r
    cdef double[:, ::1] oii = out_i
    cdef Py_ssize_t i, j, r
    cdef double cr, ci
    with nogil:
        for r in range(rank):
            for i in range(n1):
                cr = pr[i, r]
                ci = pim[i, r]
                # conj(x) * c
                for j in range(n2):
                    orr[r, j] += xr[i + j] * cr + xi[i + j] * ci
                    oii[r, j] += xr[i + j] * ci - xi[i + j] * cr
    return (out_r + 1j * out_i).T.copy()


def antidiag_mean(z):
    """Average ``z`` along its anti-diagonals."""
    cdef const cplx[:, ::1] zv = np.ascontiguousarray(z, dtype=np.complex128)
    cdef Py_ssize_t n1 = zv.shape[0]
    cdef Py_ssize_t n2 = zv.shape[1]
    cdef Py_ssize_t length = n1 + n2 - 1
    out = np.zeros(length, dtype=np.complex128)
    cdef cplx[::1] ov = out
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(n1):
            for j in range(n2):
                ov[i + j] = ov[i + j] + zv[i, j]
        for k in range(length):
            ov[k] = ov[k] / _count(k, n1, n2)
    return out


def lowrank_antidiag_mean(p, q):
    """Anti-diagonal average of ``p @ q^H``."""
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape[0] * q.shape[0] * p.shape[1] > DIRECT_CUTOFF:
        return antidiag_mean(p @ q.conj().T)
    return _lowrank_antidiag_mean_direct(p, q)


def _lowrank_antidiag_mean_direct(p, q):
    pr_a, pi_a = _planar(np.asarray(p).T)
    qr_a, qi_a = _planar(np.asarray(q).T)
    cdef const double[:, ::1] pr = pr_a
    cdef const double[:, ::1] pim = pi_a
    cdef const double[:, ::1] qr = qr_a
    cdef const double[:, ::1] qi = qi_a
    cdef Py_ssize_t rank = pr.shape[0]
    cdef Py_ssize_t n1 = pr.shape[1]
    cdef Py_ssize_t n2 = qr.shape[1]
    cdef Py_ssize_t length = n1 + n2 - 1
    acc_re = np.zeros(length)
    acc_im = np.zeros(length)
    cdef double[::1] ar = acc_re
    cdef double[::1] ai = acc_im
    cdef Py_ssize_t i, j, k, r
    cdef double cr, ci
    with nogil:
        for r in range(rank):
            for i in range(n1):
                cr = pr[r, i]
                ci = pim[r, i]
                # c * conj(q)
                for j in range(n2):
                    ar[i + j] += cr * qr[r, j] + ci * qi[r, j]
                    ai[i + j] += ci * qr[r, j] - cr * qi[r, j]
        for k in range(length):
            ar[k] = ar[k] / _count(k, n1, n2)
            ai[k] = ai[k] / _count(k, n1, n2)
    return acc_re + 1j * acc_im
