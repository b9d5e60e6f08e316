"""Quantum state on the ring: momentum basis, angle grid, p and theta operators.

Amplitudes are stored internally in FFT order (index ``k`` holds the momentum
number ``n = fftfreq(N)[k] * N``).  Use :meth:`QuantumState.signed` or
:meth:`QuantumState.amplitude` to read them by signed index.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import erfc

import numpy as np

TWO_PI = 2.0 * np.pi
GAUSSIAN_IMAGES = 3
PERIODIZATION_TOL = 1e-8
DENSE_THETA_MAX_N = 2048


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    N: int
    hbar: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise GridError(f"N must be an even integer >= 8 (got {self.N})")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise GridError(f"hbar must be positive and finite (got {self.hbar})")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def indices(self):
        """Momentum numbers in storage (FFT) order."""
        return _fft_indices(self.N)

    @property
    def signed_indices(self):
        return np.arange(-self.N // 2, self.N // 2)

    @property
    def momenta(self):
        return self.indices * self.hbar

    @property
    def dtheta(self):
        return TWO_PI / self.N

    @property
    def angles(self):
        """Grid points theta_j = 2 pi j / N on [0, 2 pi)."""
        return np.arange(self.N) * self.dtheta

    @property
    def n_harmonics(self):
        return self.N // 2 - 1


@lru_cache(maxsize=32)
def _fft_indices(N):
    out = np.rint(np.fft.fftfreq(N) * N).astype(np.int64)
    out.setflags(write=False)
    return out


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray = field(repr=False)
    grid: GridSpec

    def __post_init__(self):
        a = np.asarray(self.amplitudes)
        if a.shape != (self.grid.N,):
            raise GridError(f"amplitude vector has shape {a.shape}, expected ({self.grid.N},)")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @classmethod
    def from_signed(cls, values, grid):
        """Build from amplitudes ordered n = -N/2 .. N/2-1."""
        return cls(np.fft.ifftshift(np.asarray(values, dtype=complex)), grid)

    @classmethod
    def from_grid(cls, values, grid):
        """Build from angle-grid samples psi(theta_j)."""
        return cls(to_momentum(np.asarray(values, dtype=complex)), grid)

    def signed(self):
        return np.fft.fftshift(self.amplitudes)

    def amplitude(self, n):
        N = self.grid.N
        if not -N // 2 <= n < N // 2:
            raise IndexError(f"momentum index {n} outside [-{N // 2}, {N // 2})")
        return self.amplitudes[n % N]

    def on_grid(self):
        return to_grid(self.amplitudes)

    def with_amplitudes(self, amplitudes):
        return QuantumState(amplitudes, self.grid)

    def scaled(self, factor):
        return QuantumState(self.amplitudes * factor, self.grid)

    def __sub__(self, other):
        return QuantumState(self.amplitudes - other.amplitudes, self.grid)


# transforms: psi(theta_j) = sum_n psi_n exp(i n theta_j) / sqrt(2 pi)

def to_grid(amplitudes):
    a = np.asarray(amplitudes)
    N = a.shape[-1]
    return np.fft.ifft(a, axis=-1) * (N / np.sqrt(TWO_PI))


def to_momentum(values):
    f = np.asarray(values)
    N = f.shape[-1]
    return np.fft.fft(f, axis=-1) * (np.sqrt(TWO_PI) / N)


def plane_wave(m, grid):
    a = np.zeros(grid.N, dtype=complex)
    a[m % grid.N] = 1.0
    if not -grid.N // 2 <= m < grid.N // 2:
        raise IndexError(f"momentum index {m} outside the basis")
    return QuantumState(a, grid)


def make_gaussian_state(sigma, grid, images=GAUSSIAN_IMAGES):
    """Normalized Gaussian packet (sigma/pi)^(1/4) exp(-sigma theta^2 / 2) centred at 0.

    The packet is evaluated on the branch [-pi, pi) and periodized by summing
    ``2 * images + 1`` copies shifted by multiples of 2 pi.
    """
    if not (np.isfinite(sigma) and sigma > 0):
        raise GridError(f"sigma must be positive (got {sigma})")
    th = grid.angles
    th = np.where(th >= np.pi, th - TWO_PI, th)
    amp = (sigma / np.pi) ** 0.25
    shifts = np.arange(-images, images + 1)
    f = amp * np.exp(-0.5 * sigma * (th[None, :] + TWO_PI * shifts[:, None]) ** 2).sum(axis=0)
    # mass beyond the outermost images, relative to the unit norm of the packet
    x = (images + 0.5) * TWO_PI * np.sqrt(sigma)
    truncation = erfc(x)
    if truncation > PERIODIZATION_TOL:
        raise GridError(
            f"sigma={sigma} is too small: periodization with {images} images "
            f"leaves {truncation:.3g} of the norm (limit {PERIODIZATION_TOL:g})"
        )
    f = f / np.sqrt(np.sum(np.abs(f) ** 2) * grid.dtheta)
    return QuantumState.from_grid(f, grid)


# observables

def norm(state):
    a = state.amplitudes
    return float(np.vdot(a, a).real)


def mean_energy(state):
    """Sum of (n hbar)^2 |psi_n|^2, not divided by the norm."""
    a = state.amplitudes
    return float(np.sum(state.grid.momenta ** 2 * (a.real ** 2 + a.imag ** 2)))


def apply_p(state):
    return QuantumState(state.amplitudes * state.grid.momenta, state.grid)


def apply_theta(state, method="toeplitz"):
    """Apply the angle operator with matrix elements pi (diagonal) and 1/(i(m-n)).

    ``toeplitz`` evaluates the truncated matrix product exactly by circulant
    embedding; ``matrix`` builds the dense matrix (small N only); ``grid``
    multiplies psi(theta_j) by theta_j in [0, 2 pi) and transforms back, which
    differs from the matrix by O(1/N) on the diagonal.
    """
    grid = state.grid
    if method == "toeplitz":
        out = _theta_toeplitz(state.signed())
        return QuantumState.from_signed(out, grid)
    if method == "matrix":
        return QuantumState.from_signed(theta_matrix(grid.N) @ state.signed(), grid)
    if method == "grid":
        return QuantumState(to_momentum(state.on_grid() * grid.angles), grid)
    raise ValueError(f"unknown theta method {method!r}")


def theta_matrix(N):
    """Dense angle-operator matrix in signed index order."""
    if N > DENSE_THETA_MAX_N:
        raise GridError(f"dense theta matrix limited to N <= {DENSE_THETA_MAX_N}")
    n = np.arange(-N // 2, N // 2)
    d = n[None, :] - n[:, None]  # m - n for row n, column m
    with np.errstate(divide="ignore", invalid="ignore"):
        mat = np.where(d == 0, np.pi + 0j, 1.0 / (1j * d))
    return mat


@lru_cache(maxsize=16)
def _theta_kernel_fft(N):
    L = 2 * N
    e = np.arange(L)
    e = np.where(e >= N, e - L, e)  # e = n - m
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(e == 0, np.pi + 0j, 1.0 / (-1j * e))
    q[N] = 0.0
    out = np.fft.fft(q)
    out.setflags(write=False)
    return out


def _theta_toeplitz(signed):
    N = signed.shape[-1]
    a = np.zeros(2 * N, dtype=complex)
    a[:N] = signed
    return np.fft.ifft(np.fft.fft(a) * _theta_kernel_fft(N))[:N]


def theta_second_moment(state, method="operator"):
    """<psi|theta^2|psi> on the [0, 2 pi) branch.

    ``operator`` returns ||theta psi||^2 with the truncated matrix operator;
    ``quadrature`` returns sum_j theta_j^2 |psi(theta_j)|^2 dtheta.
    """
    if method == "operator":
        return norm(apply_theta(state))
    if method == "quadrature":
        f = state.on_grid()
        th = state.grid.angles
        return float(np.sum(th ** 2 * (f.real ** 2 + f.imag ** 2)) * state.grid.dtheta)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class Distribution:
    values: np.ndarray
    coords: np.ndarray
    kind: str  # "momentum" or "angle"

    @property
    def total(self):
        return float(np.sum(self.values))


def momentum_distribution(state):
    a = state.signed()
    return Distribution(a.real ** 2 + a.imag ** 2, state.grid.signed_indices * state.grid.hbar, "momentum")


def angle_distribution(state):
    f = state.on_grid()
    return Distribution((f.real ** 2 + f.imag ** 2) * state.grid.dtheta, state.grid.angles, "angle")
