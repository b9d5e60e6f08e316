"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

The harmonic sums use the same angle-addition recurrence, reseeded with exact
sin/cos every ``RESEED`` harmonics, so both backends agree to rounding.
"""

import numpy as np

BLOCK = 256
RESEED = 64


def harmonic_force(theta, K, with_derivative=True, num_threads=1):
    theta = np.ascontiguousarray(theta, dtype=float)
    K = np.ascontiguousarray(K, dtype=float)
    s1 = np.sin(theta)
    c1 = np.cos(theta)
    s = s1.copy()
    c = c1.copy()
    F = np.zeros_like(theta)
    D = np.zeros_like(theta) if with_derivative else None
    tmp = np.empty_like(theta)
    for k in range(K.size):
        n = k + 1.0
        if k > 0 and k % RESEED == 0:
            np.sin(n * theta, out=s)
            np.cos(n * theta, out=c)
        a = n * K[k]
        F += a * s
        if with_derivative:
            D += (n * a) * c
        np.multiply(s, c1, out=tmp)
        tmp += c * s1
        c *= c1
        c -= s * s1
        s, tmp = tmp, s
    if with_derivative:
        return F, D
    return F


def cosine_moments(theta, n_max, num_threads=1):
    theta = np.ascontiguousarray(theta, dtype=float)
    M = theta.size
    nblocks = max((M + BLOCK - 1) // BLOCK, 1)
    pad = nblocks * BLOCK - M
    s1 = np.sin(theta)
    c1 = np.cos(theta)
    s = s1.copy()
    c = c1.copy()
    partial = np.zeros((nblocks, n_max))
    for k in range(n_max):
        n = k + 1.0
        if k > 0 and k % RESEED == 0:
            s = np.sin(n * theta)
            c = np.cos(n * theta)
        partial[:, k] = np.pad(c, (0, pad)).reshape(nblocks, BLOCK).sum(axis=1)
        s, c = s * c1 + c * s1, c * c1 - s * s1
    out = np.zeros(n_max)
    for blk in range(nblocks):
        out += partial[blk]
    return out


def nonlinear_kick(f, coeff):
    f = np.asarray(f, dtype=complex)
    ph = -coeff * (f.real * f.real + f.imag * f.imag)
    return f * (np.cos(ph) + 1j * np.sin(ph))
