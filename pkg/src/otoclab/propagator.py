"""One-period Floquet map of the nonlinear kicked rotor, its inverse, and the kick spectrum."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .grid import GridSpec, QuantumState, mean_energy, norm, to_grid, to_momentum


@dataclass(frozen=True)
class FloquetParams:
    g: float
    grid: GridSpec

    def __post_init__(self):
        if not np.isfinite(self.g):
            raise ValueError(f"g must be finite (got {self.g})")
        object.__setattr__(self, "g", float(self.g))


@lru_cache(maxsize=32)
def _free_phase(N, hbar, sign):
    n = np.rint(np.fft.fftfreq(N) * N)
    out = np.exp(sign * 0.5j * hbar * n * n)
    out.setflags(write=False)
    return out


# guard

class BasisExhausted(RuntimeError):
    """Raised when the state leaks into the truncation edge of the basis."""

    def __init__(self, message, step=None, leg=None, trace=None):
        super().__init__(message)
        self.step = step
        self.leg = leg
        self.trace = trace


@dataclass(frozen=True)
class GuardEvent:
    step: int
    leg: str
    edge_fraction: float
    norm_drift: float
    reason: str


@dataclass
class EvolutionGuard:
    """Truncation monitor.

    A state violates the guard when the fraction of its norm in the outer 10%
    of momentum modes (|n| >= 0.45 N) exceeds ``edge_mass_threshold`` or when
    its norm drifts from the reference by more than ``norm_drift_threshold``.
    ``mode="halt"`` raises :class:`BasisExhausted`; ``mode="record"`` keeps
    going and collects events.
    """

    edge_mass_threshold: float = 1e-8
    norm_drift_threshold: float = 1e-9
    mode: str = "halt"
    edge_fraction: float = 0.45
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.edge_mass_threshold <= 0 or self.norm_drift_threshold <= 0:
            raise ValueError("guard thresholds must be positive")
        if self.mode not in ("halt", "record", "off"):
            raise ValueError(f"unknown guard mode {self.mode!r}")

    def fresh(self):
        return EvolutionGuard(self.edge_mass_threshold, self.norm_drift_threshold, self.mode, self.edge_fraction)

    def edge_mass(self, state):
        a = state.amplitudes
        w = a.real ** 2 + a.imag ** 2
        mask = np.abs(state.grid.indices) >= self.edge_fraction * state.grid.N
        total = w.sum()
        return float(w[mask].sum() / total) if total > 0 else 0.0

    def check(self, state, reference_norm, step, leg="forward"):
        if self.mode == "off":
            return None
        edge = self.edge_mass(state)
        nrm = norm(state)
        drift = abs(nrm - reference_norm) / reference_norm if reference_norm > 0 else 0.0
        reasons = []
        if edge > self.edge_mass_threshold:
            reasons.append(f"edge mass {edge:.3g} > {self.edge_mass_threshold:g}")
        if drift > self.norm_drift_threshold:
            reasons.append(f"norm drift {drift:.3g} > {self.norm_drift_threshold:g}")
        if not reasons:
            return None
        event = GuardEvent(step, leg, edge, drift, "; ".join(reasons))
        self.events.append(event)
        if self.mode == "halt":
            raise BasisExhausted(f"basis exhausted at {leg} step {step}: {event.reason}", step=step, leg=leg)
        return event


# one-period maps

def step_forward(state, params, guard=None, step=None, reference_norm=None):
    """U = U_free U_kick: nonlinear kick on the angle grid, then free rotation."""
    grid = state.grid
    f = kernels.nonlinear_kick(to_grid(state.amplitudes), params.g / grid.hbar)
    out = QuantumState(to_momentum(f) * _free_phase(grid.N, grid.hbar, -1.0), grid)
    if guard is not None:
        guard.check(out, norm(state) if reference_norm is None else reference_norm, step, "forward")
    return out


def step_backward(state, params, guard=None, step=None, reference_norm=None, density=None):
    """Adjoint map: inverse free rotation, then the conjugate nonlinear kick.

    The kick phase uses the density of the state being evolved, so this undoes
    an unperturbed forward step exactly.  Passing ``density`` (grid values of
    |psi|^2) replaces it with an externally supplied density.
    """
    grid = state.grid
    f = to_grid(state.amplitudes * _free_phase(grid.N, grid.hbar, 1.0))
    if density is None:
        f = kernels.nonlinear_kick(f, -params.g / grid.hbar)
    else:
        f = f * np.exp(1j * (params.g / grid.hbar) * density)
    out = QuantumState(to_momentum(f), grid)
    if guard is not None:
        guard.check(out, norm(state) if reference_norm is None else reference_norm, step, "backward")
    return out


def grid_density(state):
    f = state.on_grid()
    return f.real ** 2 + f.imag ** 2


# kick spectrum

@dataclass(frozen=True)
class KickSpectrum:
    """Harmonics n = 1..N/2-1 of the kick: Y_n (complex) and K_n = 4 g Re Y_n."""

    Y: np.ndarray
    K: np.ndarray
    g: float

    @property
    def harmonics(self):
        return np.arange(1, self.K.size + 1)


def correlation_sums(state, method="density"):
    """S_n = sum_m conj(psi_m) psi_{m+n} for n = 1..N/2-1 over the truncated basis."""
    N = state.grid.N
    H = N // 2 - 1
    if method == "direct":
        a = state.signed()
        return np.array([np.vdot(a[:-n], a[n:]) for n in range(1, H + 1)])
    if method == "density":
        # zero padding to 2N keeps index differences free of wrap-around
        L = 2 * N
        pad = np.zeros(L, dtype=complex)
        idx = state.grid.indices % L
        pad[idx] = state.amplitudes
        A = np.fft.ifft(pad) * L
        S = np.fft.fft(A.real ** 2 + A.imag ** 2) / L
        return S[1 : H + 1]
    raise ValueError(f"unknown method {method!r}")


def kick_spectrum(state, g, method="density"):
    Y = correlation_sums(state, method) / (4.0 * np.pi)
    K = 4.0 * g * Y.real
    Y.setflags(write=False)
    K.setflags(write=False)
    return KickSpectrum(Y, K, float(g))


# multi-step evolution

@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    spectra: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    events: list = field(default_factory=list)
    final_state: object = None
    halted_at: object = None


def evolve(state, params, steps, record=("norm", "mean_energy"), guard=None, snapshot_times=None):
    """Apply ``steps`` forward periods, recording observables after each kick.

    ``record`` may contain ``norm``, ``mean_energy``, ``spectrum`` and
    ``snapshots``.  On a guard violation in halt mode the raised
    :class:`BasisExhausted` carries the partial trace.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    record = set(record)
    trace = EvolutionTrace()
    ref = norm(state)

    def _record(t, s):
        trace.times.append(t)
        if "norm" in record:
            trace.norms.append(norm(s))
        if "mean_energy" in record:
            trace.energies.append(mean_energy(s))
        if "spectrum" in record:
            trace.spectra.append(kick_spectrum(s, params.g))
        if "snapshots" in record and (snapshot_times is None or t in snapshot_times):
            trace.snapshots.append((t, s))

    _record(0, state)
    for t in range(1, steps + 1):
        try:
            state = step_forward(state, params, guard, step=t, reference_norm=ref)
        except BasisExhausted as exc:
            trace.final_state = state
            trace.halted_at = t
            trace.events = list(guard.events)
            exc.trace = trace
            raise
        _record(t, state)
    trace.final_state = state
    if guard is not None:
        trace.events = list(guard.events)
    return trace
