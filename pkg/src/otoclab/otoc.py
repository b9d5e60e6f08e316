"""Echo-protocol OTOC C(t) = -<[A(t), B]^2> for A in {p, theta} and B = p.

Each t* is an independent run: forward t* kicks, apply A, evolve back t*
kicks.  With psi_R from the plain branch and phi_R from the branch started at
B|psi(0)>, the three terms are

    C1 = <psi_R|B^2|psi_R>,  C2 = <phi_R|phi_R>,  C3 = <psi_R|B|phi_R>,

and C = C1 + C2 - 2 Re C3.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .grid import (
    GridSpec,
    apply_p,
    apply_theta,
    make_gaussian_state,
    mean_energy,
    norm,
    theta_second_moment,
)
from .propagator import (
    BasisExhausted,
    EvolutionGuard,
    FloquetParams,
    grid_density,
    step_backward,
    step_forward,
)


class PerturbationKind(Enum):
    MOMENTUM = "p"
    ANGLE = "theta"


def apply_operator(kind, state):
    if kind is PerturbationKind.MOMENTUM:
        return apply_p(state)
    if kind is PerturbationKind.ANGLE:
        return apply_theta(state)
    raise ValueError(f"unsupported operator {kind!r}")


@dataclass
class LegResult:
    """One forward / perturb / backward pass."""

    final: object
    forward_energy: list
    forward_norm: list
    perturbed_norm: float
    perturbed_energy: float
    backward_energy: list
    backward_norm: list
    theta_moment: float = np.nan


def echo_leg(state, params, t_star, A, guard=None, backward="self-consistent"):
    """Forward ``t_star`` kicks, apply ``A``, evolve back ``t_star`` kicks."""
    ref = norm(state)
    fe, fn = [mean_energy(state)], [ref]
    densities = []
    for t in range(1, t_star + 1):
        if backward == "replay":
            densities.append(grid_density(state))
        state = step_forward(state, params, guard, step=t, reference_norm=ref)
        fe.append(mean_energy(state))
        fn.append(norm(state))
    theta_moment = theta_second_moment(state) if A is PerturbationKind.ANGLE else np.nan
    state = apply_operator(A, state)
    ntilde = norm(state)
    etilde = mean_energy(state)
    be, bn = [etilde], [ntilde]
    for k in range(1, t_star + 1):
        dens = None
        if backward == "replay":
            dens = densities[t_star - k]
        elif backward != "self-consistent":
            raise ValueError(f"unknown backward mode {backward!r}")
        state = step_backward(state, params, guard, step=k, reference_norm=ntilde, density=dens)
        be.append(mean_energy(state))
        bn.append(norm(state))
    return LegResult(state, fe, fn, ntilde, etilde, be, bn, theta_moment)


@dataclass
class OtocRecord:
    t: int
    C: float
    C1: float
    C2: float
    ReC3: float
    norm_tilde: float
    mean_energy: float
    ptilde2: float
    forward_energy: list = field(default_factory=list)
    backward_energy: list = field(default_factory=list)
    backward_norm: list = field(default_factory=list)
    theta_moment: float = np.nan
    guard_events: list = field(default_factory=list)

    @property
    def exhausted(self):
        return bool(self.guard_events)


def otoc_terms(psi_R, phi_R, B):
    b_psi = apply_operator(B, psi_R)
    C1 = norm(b_psi)
    C2 = norm(phi_R)
    C3 = complex(np.vdot(b_psi.amplitudes, phi_R.amplitudes))
    return C1, C2, C3


def otoc_at(psi0, params, t_star, A=PerturbationKind.MOMENTUM, B=PerturbationKind.MOMENTUM,
            guard=None, backward="self-consistent"):
    """Single echo-protocol evaluation at ``t_star`` kicks."""
    if B is not PerturbationKind.MOMENTUM:
        raise ValueError("only B = p is supported")
    guard = EvolutionGuard() if guard is None else guard.fresh()
    main = echo_leg(psi0, params, t_star, A, guard, backward)
    other = echo_leg(apply_operator(B, psi0), params, t_star, A, guard, backward)
    C1, C2, C3 = otoc_terms(main.final, other.final, B)
    return OtocRecord(
        t=t_star,
        C=C1 + C2 - 2.0 * C3.real,
        C1=C1,
        C2=C2,
        ReC3=C3.real,
        norm_tilde=main.perturbed_norm,
        mean_energy=main.forward_energy[-1],
        ptilde2=main.perturbed_energy,
        forward_energy=main.forward_energy,
        backward_energy=main.backward_energy,
        backward_norm=main.backward_norm,
        theta_moment=main.theta_moment,
        guard_events=list(guard.events),
    )


@dataclass
class OtocSeries:
    records: list
    config: dict
    truncated: bool = False
    exhausted_at: object = None
    message: str = ""

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def t(self):
        return self.column("t").astype(int)


def worker_count():
    try:
        return max(int(os.environ.get("OTOCLAB_THREADS", "1")), 1)
    except ValueError:
        return 1


def _setup(config):
    grid = GridSpec(config.N, config.hbar)
    return make_gaussian_state(config.sigma, grid), FloquetParams(config.g, grid)


def _guard_for(config, mode="halt"):
    return EvolutionGuard(config.edge_mass_threshold, config.norm_drift_threshold, mode)


def otoc(config, A=PerturbationKind.MOMENTUM, B=PerturbationKind.MOMENTUM, t_max=None,
         guard_mode="halt", threads=None):
    """OTOC series for t* = 1..t_max, truncated at the first basis exhaustion."""
    t_max = config.t_max if t_max is None else t_max
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    psi0, params = _setup(config)
    guard = _guard_for(config, guard_mode)
    backward = getattr(config, "backward", "self-consistent")

    def run(t):
        try:
            return otoc_at(psi0, params, t, A, B, guard, backward)
        except BasisExhausted as exc:
            return exc

    threads = worker_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, range(1, t_max + 1)))
    else:
        results = []
        for t in range(1, t_max + 1):
            results.append(run(t))
            if isinstance(results[-1], BasisExhausted):
                break
    records = []
    series = OtocSeries(records, _config_echo(config))
    for t, res in zip(range(1, t_max + 1), results):
        if isinstance(res, BasisExhausted):
            series.truncated = True
            series.exhausted_at = t
            series.message = str(res)
            break
        records.append(res)
    return series


def _config_echo(config):
    return config.to_dict() if hasattr(config, "to_dict") else dict(vars(config))


@dataclass
class DominanceRow:
    t: int
    c2_ratio: float
    c3_ratio: float
    dominant: bool
    flag: str = ""


def dominance_report(series, threshold=1e-2):
    """Per-t ratios C2/C1 and |Re C3|/C1; flags rows where C1 does not dominate."""
    if not series.records:
        raise ValueError("empty series")
    rows = []
    for r in series.records:
        if r.C1 == 0:
            rows.append(DominanceRow(r.t, np.nan, np.nan, False, "C1 = 0, ratios undefined"))
            continue
        c2 = r.C2 / r.C1
        c3 = abs(r.ReC3) / r.C1
        ok = c2 < threshold and c3 < threshold
        rows.append(DominanceRow(r.t, c2, c3, ok, "" if ok else "C1 not dominant"))
    return rows


# theta-p scaling with N

@dataclass
class ScalingCell:
    g: float
    N: int
    C_tstar: float
    ntilde: float
    ptilde2: float
    exhausted: bool
    record: object = None


def scaling_sweep(g_list, N_list, t_star, config, guard_mode="record", threads=None):
    """C(t*) for A = theta, B = p over a grid of (g, N).

    The theta-perturbed state has an intrinsic |p|^-2 tail that always touches
    the basis edge, so by default guard events are recorded and the cell is
    flagged rather than dropped.  With ``guard_mode="halt"`` exhausted cells
    are omitted.
    """
    jobs = [(g, N) for g in g_list for N in N_list]

    def run(job):
        g, N = job
        cfg = config.replace(g=g, N=N) if hasattr(config, "replace") else config
        psi0, params = _setup(cfg)
        try:
            rec = otoc_at(psi0, params, t_star, PerturbationKind.ANGLE, PerturbationKind.MOMENTUM,
                          _guard_for(cfg, guard_mode), getattr(cfg, "backward", "self-consistent"))
        except BasisExhausted:
            return None
        return ScalingCell(g, N, rec.C, rec.norm_tilde, rec.ptilde2, rec.exhausted, rec)

    threads = worker_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            cells = list(pool.map(run, jobs))
    else:
        cells = [run(j) for j in jobs]
    return [c for c in cells if c is not None]


def fit_scaling(cells):
    """Per-g power-law fit of C(t*) and ptilde2 against N (log-log least squares)."""
    from .analysis import fit_linear

    out = {}
    for g in sorted({c.g for c in cells}):
        sub = sorted((c for c in cells if c.g == g), key=lambda c: c.N)
        Ns = np.array([c.N for c in sub], dtype=float)
        if np.unique(Ns).size < 2:
            raise ValueError(f"g={g}: need at least two distinct N values for a scaling fit")
        lnN = np.log(Ns)
        out[g] = {
            "C": fit_linear(lnN, np.log([c.C_tstar for c in sub]), min_points=2),
            "ptilde2": fit_linear(lnN, np.log([c.ptilde2 for c in sub]), min_points=2),
        }
    return out


# forward / perturb / backward energy trace

@dataclass
class EnergyTrace:
    t_star: int
    forward_energy: list
    forward_norm: list
    ptilde2: float
    ntilde: float
    backward_energy: list
    backward_norm: list
    theta_moment: float
    guard_events: list


def energy_trace_experiment(config, t_star=None, A=PerturbationKind.ANGLE, guard_mode="record"):
    t_star = config.t_star if t_star is None else t_star
    psi0, params = _setup(config)
    guard = _guard_for(config, guard_mode)
    leg = echo_leg(psi0, params, t_star, A, guard, getattr(config, "backward", "self-consistent"))
    return EnergyTrace(t_star, leg.forward_energy, leg.forward_norm, leg.perturbed_energy, leg.perturbed_norm,
                       leg.backward_energy, leg.backward_norm, leg.theta_moment, list(guard.events))
