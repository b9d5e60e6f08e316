"""Classical generalized kicked rotor: ensembles, sensitivity, classical OTOC, Lyapunov exponent.

One kick with harmonic strengths K_n:

    p'     = p + sum_n n K_n sin(n theta)
    theta' = theta + p'            (mod 2 pi)

and its tangent map

    dp'     = dp + sum_n n^2 K_n cos(n theta) dtheta
    dtheta' = dtheta + dp'
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .grid import TWO_PI, GridSpec, make_gaussian_state
from .propagator import FloquetParams, kick_spectrum, step_forward

SWITCH_SEPARATION = 1e-3


@dataclass(frozen=True)
class ClassicalEnsemble:
    theta: np.ndarray
    p: np.ndarray
    partner_theta: np.ndarray
    partner_p: np.ndarray
    delta_theta0: float = 1e-5

    @property
    def size(self):
        return self.theta.size

    def __post_init__(self):
        n = self.theta.size
        if not (self.p.size == self.partner_theta.size == self.partner_p.size == n):
            raise ValueError("ensemble arrays must have equal length")


def gaussian_pairs(seed, size):
    """Standard normal pairs, trajectory i drawn from counter words 2i and 2i+1.

    The stream is a Philox counter generator keyed by ``seed``; trajectory i
    never depends on the ensemble size or on other trajectories.
    """
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    u = gen.random(2 * size).reshape(size, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    ang = TWO_PI * u[:, 1]
    return r * np.cos(ang), r * np.sin(ang)


def sample_ensemble(sigma, grid, size, seed, delta_theta0=1e-5):
    """Phase-space Gaussian matching the quantum packet's angle and momentum variances."""
    if size < 1:
        raise ValueError("ensemble size must be >= 1")
    z1, z2 = gaussian_pairs(seed, size)
    theta = np.mod(z1 * np.sqrt(1.0 / (2.0 * sigma)), TWO_PI)
    p = z2 * np.sqrt(grid.hbar ** 2 * sigma / 2.0)
    return ClassicalEnsemble(theta, p, np.mod(theta + delta_theta0, TWO_PI), p.copy(), delta_theta0)


def _kick_array(kicks):
    return np.ascontiguousarray(kicks.K if hasattr(kicks, "K") else kicks, dtype=float)


def map_step(theta, p, kicks):
    K = _kick_array(kicks)
    F = kernels.harmonic_force(np.ascontiguousarray(theta, dtype=float), K, with_derivative=False)
    p2 = p + F
    return np.mod(theta + p2, TWO_PI), p2


def classical_step(ensemble, kicks):
    th, p = map_step(ensemble.theta, ensemble.p, kicks)
    pth, pp = map_step(ensemble.partner_theta, ensemble.partner_p, kicks)
    return replace(ensemble, theta=th, p=p, partner_theta=pth, partner_p=pp)


def tangent_step(dtheta, dp, theta, kicks):
    K = _kick_array(kicks)
    _, D = kernels.harmonic_force(np.ascontiguousarray(theta, dtype=float), K)
    dp2 = dp + D * dtheta
    return dtheta + dp2, dp2


def step_jacobian(theta, kicks):
    """Per-trajectory 2x2 Jacobian d(theta', p')/d(theta, p)."""
    K = _kick_array(kicks)
    _, D = kernels.harmonic_force(np.ascontiguousarray(theta, dtype=float), K)
    J = np.empty((np.size(theta), 2, 2))
    J[:, 0, 0] = 1.0 + D
    J[:, 0, 1] = 1.0
    J[:, 1, 0] = D
    J[:, 1, 1] = 1.0
    return J


# kick sources

class QuantumMeanField:
    """Kick harmonics from a co-evolved quantum state with the same hbar, g, sigma."""

    def __init__(self, grid, g, sigma, method="density"):
        self.params = FloquetParams(g, grid)
        self.state = make_gaussian_state(sigma, grid)
        self.method = method
        self.n_max = grid.n_harmonics

    def spectrum(self):
        return kick_spectrum(self.state, self.params.g, self.method)

    def advance(self):
        self.state = step_forward(self.state, self.params)


class EnsembleDensity:
    """Kick harmonics from a Gaussian kernel density estimate of the angle marginal.

    K_n = (g / pi) <cos n theta> exp(-n^2 h^2 / 2), the classical analogue of
    the quantum correlation sum with the ensemble standing in for |psi|^2.
    """

    def __init__(self, g, n_max, bandwidth=0.05):
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        self.g = float(g)
        self.n_max = int(n_max)
        self.bandwidth = float(bandwidth)
        self.theta = None
        n = np.arange(1, self.n_max + 1)
        self._smooth = np.exp(-0.5 * (n * self.bandwidth) ** 2)

    def bind(self, theta):
        self.theta = theta

    def spectrum(self):
        m = kernels.cosine_moments(self.theta, self.n_max) / self.theta.size
        return (self.g / np.pi) * m * self._smooth

    def advance(self):
        pass


def make_source(config, grid):
    if config.kick_source == "quantum-mean-field":
        return QuantumMeanField(grid, config.g, config.sigma)
    if config.kick_source == "ensemble-density":
        return EnsembleDensity(config.g, grid.n_harmonics, config.kde_bandwidth)
    raise ValueError(f"unknown kick source {config.kick_source!r}")


# sensitivity

def log_mean_exp(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.nan
    m = np.max(x)
    if not np.isfinite(m):
        return m
    return float(m + np.log(np.mean(np.exp(x - m))))


@dataclass
class SensitivitySeries:
    t: np.ndarray
    log_Ccl: np.ndarray
    lam: np.ndarray
    overflow_flag: np.ndarray
    method: str
    log_Ccl_fd: np.ndarray = None
    log_Ccl_tangent: np.ndarray = None
    lam_fd: np.ndarray = None
    lam_tangent: np.ndarray = None
    log_Ccl_halves: np.ndarray = None
    lam_norm: np.ndarray = None
    excluded: np.ndarray = None
    snapshots: dict = field(default_factory=dict)


def _wrap_diff(a, b):
    return np.mod(a - b + np.pi, TWO_PI) - np.pi


def run_sensitivity(config, t_max=None, method=None, snapshot_times=(), source=None):
    """Advance an ensemble with finite-difference partners and renormalized tangent vectors.

    Returns both estimators.  ``method`` picks which one is reported as
    ``log_Ccl``/``lam``: ``finite-difference`` follows the partner separation
    and switches a trajectory to its tangent-space value once the separation
    exceeds ``SWITCH_SEPARATION`` (counted in ``overflow_flag``);
    ``tangent`` uses the renormalized tangent map throughout.  ``lam_norm``
    is the growth rate of the full tangent-vector length (the usual Benettin
    estimate), which stays finite when dp vanishes identically.
    """
    t_max = config.t_max if t_max is None else t_max
    method = config.sensitivity if method is None else method
    grid = GridSpec(config.N, config.hbar)
    ens = sample_ensemble(config.sigma, grid, config.ensemble_size, config.seed, config.delta_theta0)
    source = make_source(config, grid) if source is None else source
    d0 = ens.delta_theta0
    M = ens.size
    half = M // 2

    th, p, pth, pp = ens.theta, ens.p, ens.partner_theta, ens.partner_p
    tth = np.ones(M)  # tangent vector, starts along theta
    tp = np.zeros(M)
    log_scale = np.zeros(M)
    switched = np.zeros(M, dtype=bool)
    bad = np.zeros(M, dtype=bool)

    out = {k: np.empty(t_max) for k in ("fd", "tg", "lfd", "ltg", "lnorm", "h0", "h1")}
    flags = np.zeros(t_max, dtype=int)
    excluded = np.zeros(t_max, dtype=int)
    snaps = {}
    if 0 in snapshot_times:
        snaps[0] = (th.copy(), p.copy())
    for t in range(1, t_max + 1):
        if isinstance(source, EnsembleDensity):
            source.bind(th)
        kicks = source.spectrum()
        K = _kick_array(kicks)
        F, D = kernels.harmonic_force(th, K)
        # tangent map, then Benettin renormalization
        tp = tp + D * tth
        tth = tth + tp
        r = np.hypot(tth, tp)
        log_scale += np.log(r)
        tth /= r
        tp /= r
        p = p + F
        th = np.mod(th + p, TWO_PI)
        pp = pp + kernels.harmonic_force(pth, K, with_derivative=False)
        pth = np.mod(pth + pp, TWO_PI)
        source.advance()

        bad |= ~(np.isfinite(p) & np.isfinite(pp) & np.isfinite(log_scale) & np.isfinite(tp))
        dth = _wrap_diff(pth, th)
        dp = pp - p
        switched |= np.hypot(dth, dp) > SWITCH_SEPARATION
        with np.errstate(divide="ignore"):
            ln_tg = log_scale + np.log(np.abs(tp))
            ln_fd_raw = np.log(np.abs(dp) / d0)
        ln_fd = np.where(switched, ln_tg, ln_fd_raw)
        # -inf (dp exactly zero) is a legitimate value; only broken trajectories are dropped
        good = ~bad
        i = t - 1
        excluded[i] = M - good.sum()
        flags[i] = int(switched.sum())
        out["fd"][i] = log_mean_exp(2.0 * ln_fd[good])
        out["tg"][i] = log_mean_exp(2.0 * ln_tg[good])
        out["lfd"][i] = ln_fd[good].mean() / t
        out["ltg"][i] = ln_tg[good].mean() / t
        out["lnorm"][i] = log_scale[good].mean() / t
        chosen = ln_fd if method == "finite-difference" else ln_tg
        out["h0"][i] = log_mean_exp(2.0 * chosen[:half][good[:half]])
        out["h1"][i] = log_mean_exp(2.0 * chosen[half:][good[half:]])
        if t in snapshot_times:
            snaps[t] = (th.copy(), p.copy())

    fd = method == "finite-difference"
    return SensitivitySeries(
        t=np.arange(1, t_max + 1),
        log_Ccl=out["fd"] if fd else out["tg"],
        lam=out["lfd"] if fd else out["ltg"],
        overflow_flag=flags,
        method=method,
        log_Ccl_fd=out["fd"],
        log_Ccl_tangent=out["tg"],
        lam_fd=out["lfd"],
        lam_tangent=out["ltg"],
        log_Ccl_halves=np.vstack([out["h0"], out["h1"]]),
        lam_norm=out["lnorm"],
        excluded=excluded,
        snapshots=snaps,
    )


def classical_otoc(config, t_max=None, method="finite-difference"):
    """ln C_cl(t) = ln <(dp(t)/dtheta(0))^2>, accumulated in log space."""
    return run_sensitivity(config, t_max, method)


def lyapunov(config, t_max=None, method="tangent"):
    """lambda(t) = <ln|dp(t)/dtheta(0)|>/t from renormalized tangent vectors."""
    return run_sensitivity(config, t_max, method)


def phase_portrait(config, times=None):
    """Wrapped (theta, p) snapshots of the ensemble at the requested kicks."""
    times = sorted(set(config.times if times is None else times))
    res = run_sensitivity(config, max(max(times), 1), "tangent", snapshot_times=set(times))
    return {t: res.snapshots[t] for t in times}


@dataclass
class SemiclassicalSeries:
    t: np.ndarray
    C: np.ndarray
    hbar2_Ccl: np.ndarray
    quantum_valid: np.ndarray
    message: str = ""


def semiclassical_compare(config, t_max=None):
    """Quantum p-p OTOC next to hbar^2 times the classical OTOC on a common time axis."""
    from .otoc import otoc

    t_max = config.t_max if t_max is None else t_max
    q = otoc(config, t_max=t_max)
    cl = classical_otoc(config, t_max, config.sensitivity)
    C = np.full(t_max, np.nan)
    valid = np.zeros(t_max, dtype=bool)
    for r in q.records:
        C[r.t - 1] = r.C
        valid[r.t - 1] = True
    hc = config.hbar ** 2 * np.exp(cl.log_Ccl)
    return SemiclassicalSeries(np.arange(1, t_max + 1), C, hc, valid, q.message)
