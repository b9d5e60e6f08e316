# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics mirror :mod:`otoclab._fallback` exactly."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sin, cos

cnp.import_array()

DEF BLOCK = 256
DEF RESEED = 64


cdef void _force_block(const double* th, const double* K, Py_ssize_t lo, Py_ssize_t hi,
                       Py_ssize_t H, double* F, double* D, double* s, double* c,
                       double* s1, double* c1, bint with_d) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double a, b, tmp, n
    for i in range(lo, hi):
        s1[i] = sin(th[i])
        c1[i] = cos(th[i])
        s[i] = s1[i]
        c[i] = c1[i]
        F[i] = 0.0
        if with_d:
            D[i] = 0.0
    for k in range(H):
        n = k + 1.0
        if k > 0 and k % RESEED == 0:
            for i in range(lo, hi):
                s[i] = sin(n * th[i])
                c[i] = cos(n * th[i])
        a = n * K[k]
        if with_d:
            b = n * a
            for i in range(lo, hi):
                F[i] += a * s[i]
                D[i] += b * c[i]
                tmp = s[i] * c1[i] + c[i] * s1[i]
                c[i] = c[i] * c1[i] - s[i] * s1[i]
                s[i] = tmp
        else:
            for i in range(lo, hi):
                F[i] += a * s[i]
                tmp = s[i] * c1[i] + c[i] * s1[i]
                c[i] = c[i] * c1[i] - s[i] * s1[i]
                s[i] = tmp


def harmonic_force(const double[::1] theta, const double[::1] K, bint with_derivative=True, int num_threads=1):
    cdef Py_ssize_t M = theta.shape[0], H = K.shape[0]
    cdef Py_ssize_t nblocks = (M + BLOCK - 1) // BLOCK, blk, lo, hi
    F = np.empty(M)
    D = np.empty(M) if with_derivative else np.empty(0)
    work = np.empty((4, M))
    cdef double[::1] Fv = F, Dv = D
    cdef double[:, ::1] w = work
    cdef double* dptr = &Dv[0] if with_derivative and M > 0 else NULL
    if M == 0:
        return (F, D) if with_derivative else F
    for blk in prange(nblocks, nogil=True, num_threads=max(num_threads, 1), schedule="static"):
        lo = blk * BLOCK
        hi = min(lo + BLOCK, M)
        _force_block(&theta[0], &K[0] if H > 0 else NULL, lo, hi, H, &Fv[0], dptr,
                     &w[0, 0], &w[1, 0], &w[2, 0], &w[3, 0], with_derivative)
    return (F, D) if with_derivative else F


def cosine_moments(const double[::1] theta, Py_ssize_t n_max, int num_threads=1):
    """Sum over samples of cos(n*theta) for n = 1..n_max.

    Partial sums are formed per fixed block of samples and reduced in block
    order, so the result does not depend on the thread count.
    """
    cdef Py_ssize_t M = theta.shape[0], i, k, blk
    cdef Py_ssize_t nblocks = (M + BLOCK - 1) // BLOCK
    partial = np.zeros((max(nblocks, 1), n_max))
    cdef double[:, ::1] acc = partial
    cdef double s1, c1, s, c, tmp, n
    for blk in prange(nblocks, nogil=True, num_threads=max(num_threads, 1), schedule="static"):
        for i in range(blk * BLOCK, min((blk + 1) * BLOCK, M)):
            s1 = sin(theta[i])
            c1 = cos(theta[i])
            s = s1
            c = c1
            for k in range(n_max):
                n = k + 1.0
                if k > 0 and k % RESEED == 0:
                    s = sin(n * theta[i])
                    c = cos(n * theta[i])
                acc[blk, k] += c
                tmp = s * c1 + c * s1
                c = c * c1 - s * s1
                s = tmp
    out = np.zeros(n_max)
    for blk in range(nblocks):
        out += partial[blk]
    return out


def nonlinear_kick(const double complex[::1] f, double coeff):
    """Return f * exp(-1j * coeff * |f|^2)."""
    cdef Py_ssize_t N = f.shape[0], j
    out = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double re, im, ph
    for j in range(N):
        re = f[j].real
        im = f[j].imag
        ph = -coeff * (re * re + im * im)
        o[j] = f[j] * (cos(ph) + 1j * sin(ph))
    return out
