"""End-to-end acceptance checks at desk scale.

Each test prints one ``criterion k: PASS/FAIL`` line (collected again in the
terminal summary) and asserts at the stated tolerance.  Run with
``pytest tests/test_acceptance.py -v -s``.
"""

import numpy as np
import pytest

from otoclab import analysis, classical, otoc
from otoclab.config import ExperimentConfig
from otoclab.grid import (
    GridSpec,
    QuantumState,
    apply_theta,
    make_gaussian_state,
    momentum_distribution,
    norm,
)
from otoclab.otoc import PerturbationKind
from otoclab.propagator import (
    BasisExhausted,
    EvolutionGuard,
    FloquetParams,
    correlation_sums,
    evolve,
    step_backward,
    step_forward,
)

import oracles

pytestmark = pytest.mark.slow

HBAR = 0.6
G_MAIN = (1.3, 1.5, 2.0, 3.0)
P, TH = PerturbationKind.MOMENTUM, PerturbationKind.ANGLE
_cache = {}


def main_series(g):
    """p-p OTOC series for the main parameter set (sigma=1, N=2^14, t_max=12)."""
    if g not in _cache:
        _cache[g] = otoc.otoc(ExperimentConfig(g=g, hbar=HBAR, sigma=1.0, N=2 ** 14, t_max=12))
    return _cache[g]


def scaling_cells():
    if "scaling" not in _cache:
        cfg = ExperimentConfig(hbar=HBAR, sigma=10.0)
        _cache["scaling"] = otoc.scaling_sweep([0.4, 0.5, 0.6], [2 ** 12, 2 ** 13, 2 ** 14, 2 ** 15], 7, cfg)
    return _cache["scaling"]


# 1. energy growth law

def test_energy_growth_rate(report):
    details, ok = [], True
    for g in G_MAIN:
        grid = GridSpec(2 ** 14, HBAR)
        psi = make_gaussian_state(1.0, grid)
        try:
            tr = evolve(psi, FloquetParams(g, grid), 15, guard=EvolutionGuard())
        except BasisExhausted as exc:
            tr = exc.trace
        t, E = np.array(tr.times), np.array(tr.energies)
        fit = analysis.fit_exponential_rate(t, E, skip=2)
        ref = analysis.gamma_theory(g, HBAR)
        rel = fit["rate"] / ref - 1
        ok &= abs(rel) <= 0.25
        details.append(f"g={g}: {fit['rate']:.4f} vs {ref:.4f} ({rel:+.0%}, t<={t[-1]})")
    report(1, ok, "; ".join(details))
    assert ok


# 2. super-exponential quantum OTOC

def test_super_exponential_quantum_otoc(report):
    details, ok = [], True
    for g in G_MAIN:
        s = main_series(g)
        try:
            f = analysis.fit_super_exponential(s.t, np.log(s.column("C")), skip=2,
                                               gamma=analysis.gamma_theory(g, HBAR), g=g, hbar=HBAR)
        except analysis.FitError as exc:
            ok = False
            details.append(f"g={g}: no fit ({exc}; series ends t={s.t[-1]})")
            continue
        good = f["c"] > 3 * f.stderr["c"] and f.r_squared > 0.99
        ok &= good
        details.append(f"g={g}: c={f['c']:.3f}+-{f.stderr['c']:.3f} r2={f.r_squared:.4f} (t<={s.t[-1]})")
    report(2, ok, "; ".join(details))
    assert ok


# 3. C1 dominance

def test_c1_dominance(report):
    details, ok = [], True
    for g in G_MAIN:
        rows = [r for r in otoc.dominance_report(main_series(g)) if r.t >= 3]
        if not rows:
            ok = False
            details.append(f"g={g}: no points at t>=3 (series ends t={main_series(g).t[-1]})")
            continue
        worst2 = max(r.c2_ratio for r in rows)
        worst3 = max(r.c3_ratio for r in rows)
        ok &= worst2 < 1e-2 and worst3 < 1e-2
        details.append(f"g={g}: max C2/C1={worst2:.2e} max|ReC3|/C1={worst3:.2e}")
    report(3, ok, "; ".join(details))
    assert ok


# 4. echo protocol against dense commutator algebra

def test_brute_force_oracle(report):
    worst = 0.0
    for N, g in ((32, 1.5), (64, 1.3), (64, 3.0)):
        grid = GridSpec(N, HBAR)
        psi = make_gaussian_state(1.0, grid)
        for A, Amat in ((P, oracles.p_matrix(N, HBAR)), (TH, oracles.theta_matrix(N))):
            for t in (1, 2, 3):
                rec = otoc.otoc_at(psi, FloquetParams(g, grid), t, A, P, EvolutionGuard(mode="off"))
                ref = oracles.commutator_otoc(oracles.gaussian(N, 1.0), Amat, oracles.p_matrix(N, HBAR), g, HBAR, t)
                worst = max(worst, abs(rec.C - ref) / abs(ref))
    ok = worst <= 1e-8
    report(4, ok, f"max relative deviation {worst:.1e}")
    assert ok


# 5. classical super-exponential growth

def test_classical_super_exponential(report):
    details, ok = [], True
    for g in (1.5, 2.0):
        cfg = ExperimentConfig(g=g, hbar=HBAR, sigma=1.0, N=2 ** 14, t_max=12, ensemble_size=10_000,
                               delta_theta0=1e-5)
        s = classical.classical_otoc(cfg)
        f = analysis.fit_linear(s.t.astype(float) ** 2, s.log_Ccl, skip=2)
        ref = analysis.gamma_theory(g, HBAR)
        rel = f["slope"] / ref - 1
        ok &= abs(rel) <= 0.30
        details.append(f"g={g}: slope {f['slope']:.4f} vs {ref:.4f} ({rel:+.0%})")
    report(5, ok, "; ".join(details))
    assert ok


# 6. linearly growing Lyapunov exponent

def test_hyper_chaos(report):
    from otoclab.experiments import chaotic_window

    cfg = ExperimentConfig(g=1.5, hbar=HBAR, sigma=1.0, N=2 ** 14, t_max=15, ensemble_size=10_000)
    s = classical.lyapunov(cfg)
    t = s.t.astype(float)
    lo, hi = chaotic_window(t, s.lam)
    m = (t >= lo) & (t <= hi)
    f = analysis.fit_linear(t[m], s.lam[m])
    prop = analysis.fit_proportional(t[m], s.lam[m])
    early = t < lo
    below = bool(np.all(s.lam[early] < prop["k"] * t[early])) and early.any()
    ok = f.r_squared > 0.9 and f["slope"] > 0 and below
    report(6, ok, f"window t={lo:g}..{hi:g}: slope {f['slope']:.4f} r2={f.r_squared:.3f}; "
                  f"{early.sum()} early points below lambda={prop['k']:.3f} t: {below}")
    assert ok


# 7. linear scaling of C(t*) with basis size

def test_n_scaling(report):
    fits = otoc.fit_scaling(scaling_cells())
    details, ok = [], True
    for g in (0.4, 0.5, 0.6):
        e = fits[g]["C"]["slope"]
        ok &= abs(e - 1.0) <= 0.1
        details.append(f"g={g}: exponent {e:.3f}")
    flagged = sum(c.exhausted for c in scaling_cells())
    report(7, ok, "; ".join(details) + f" ({flagged} cells flagged exhausted)")
    assert ok


# 8. momentum tails before and after the theta action

def test_tail_laws(report):
    details, ok = [], True
    for g in (0.4, 0.5, 0.6):
        grid = GridSpec(2 ** 14, HBAR)
        psi = make_gaussian_state(10.0, grid)
        params = FloquetParams(g, grid)
        for _ in range(7):
            psi = step_forward(psi, params)
        pw = analysis.fit_power_law(momentum_distribution(apply_theta(psi)))
        ok &= abs(pw["exponent"] + 2) <= 0.3
        msg = f"g={g}: exponent {pw['exponent']:.3f}"
        if g == 0.6:
            xi = analysis.fit_localization_length(momentum_distribution(psi))["xi"]
            ok &= abs(xi / 2.0 - 1) <= 0.3
            msg += f", xi {xi:.3f}"
        details.append(msg)
    report(8, ok, "; ".join(details))
    assert ok


# 9. backward-leg energy law

def test_backward_energy_law(report):
    g, t_star = 0.6, 7
    cells = [c for c in scaling_cells() if c.g == g]
    # C(t*) ~ E~ exp(nu gamma~ t*): the scaling sweep fixes nu gamma~ per basis size
    nu_gamma = float(np.mean([np.log(c.C_tstar / c.ptilde2) / t_star for c in cells]))
    cfg = ExperimentConfig(g=g, hbar=HBAR, sigma=10.0, N=2 ** 15)
    tr = otoc.energy_trace_experiment(cfg, t_star, A=TH)
    gt = analysis.gamma_tilde(g, HBAR, tr.ntilde)
    f = analysis.fit_exponential_rate(np.arange(len(tr.backward_energy)), tr.backward_energy, skip=0)
    rel = f["rate"] / nu_gamma - 1
    ok = abs(rel) <= 0.30
    report(9, ok, f"backward rate {f['rate']:.3f} vs nu*gamma~ {nu_gamma:.3f} ({rel:+.0%}); "
                  f"Ntilde={tr.ntilde:.2f}, gamma~={gt:.3f}, nu={nu_gamma / gt:.3f}")
    assert ok


# 10. semiclassical correspondence

def test_semiclassical_correspondence(report):
    cfg = ExperimentConfig(g=0.01, hbar=0.001, sigma=10.0, N=2 ** 15, t_max=5, ensemble_size=10_000)
    s = classical.semiclassical_compare(cfg)
    ratio = s.C / s.hbar2_Ccl
    within = np.all(s.quantum_valid) and np.all(np.abs(np.log10(ratio)) <= 1.0)
    above = bool(s.quantum_valid[0] and s.C[0] >= s.hbar2_Ccl[0])
    ok = bool(within and above)
    shown = ", ".join(f"t={t}: {r:.3g}" if v else f"t={t}: exhausted" for t, r, v in zip(s.t, ratio, s.quantum_valid))
    report(10, ok, f"C / hbar^2 C_cl = {shown}")
    assert ok


# 11. property suites

def test_property_suites(report):
    checks = {}
    grid = GridSpec(1024, HBAR)
    params = FloquetParams(1.5, grid)
    psi = make_gaussian_state(1.0, grid)
    tr = evolve(psi, params, 20)
    checks["unitarity"] = (max(abs(n - 1) for n in tr.norms), 1e-10)

    fwd = psi
    for _ in range(20):
        fwd = step_forward(fwd, params)
    back = fwd
    for _ in range(20):
        back = step_backward(back, params)
    checks["echo 1-fidelity"] = (1 - abs(np.vdot(psi.amplitudes, back.amplitudes)) ** 2, 1e-10)

    th = np.random.default_rng(0).uniform(0, 2 * np.pi, 10_000)
    J = classical.step_jacobian(th, np.random.default_rng(1).normal(size=300) * 3)
    checks["|detJ-1|"] = (np.max(np.abs(J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0] - 1)), 1e-12)

    route = 0.0
    for N in (16, 256, 4096):
        s = QuantumState(np.random.default_rng(N).normal(size=N) + 1j * np.random.default_rng(N + 1).normal(size=N),
                         GridSpec(N, HBAR))
        s = s.scaled(1 / np.sqrt(norm(s)))
        route = max(route, np.max(np.abs(correlation_sums(s, "density") - correlation_sums(s, "direct"))))
    checks["kick routes"] = (route, 1e-12)

    theta = 0.0
    for N in (16, 64, 256):
        g = GridSpec(N, HBAR)
        s = QuantumState(np.random.default_rng(N).normal(size=N) + 0j, g)
        ref = apply_theta(s, "matrix").amplitudes
        theta = max(theta, np.max(np.abs(apply_theta(s).amplitudes - ref)) / np.max(np.abs(ref)))
    checks["theta operator"] = (theta, 1e-10)

    cfg = ExperimentConfig(g=1.3, N=2048, t_max=5, ensemble_size=2000)
    a, b = otoc.otoc(cfg, threads=1), otoc.otoc(cfg, threads=4)
    det = np.max(np.abs(a.column("C") - b.column("C")) / a.column("C"))
    import os

    old = os.environ.get("OTOCLAB_THREADS")
    c1 = classical.run_sensitivity(cfg)
    os.environ["OTOCLAB_THREADS"] = "4"
    try:
        c4 = classical.run_sensitivity(cfg)
    finally:
        if old is None:
            del os.environ["OTOCLAB_THREADS"]
        else:
            os.environ["OTOCLAB_THREADS"] = old
    det = max(det, np.max(np.abs(c1.log_Ccl - c4.log_Ccl) / np.abs(c1.log_Ccl)))
    checks["worker determinism"] = (det, 1e-12)

    ok = all(v < tol for v, tol in checks.values())
    report(11, ok, "; ".join(f"{k} {v:.1e} (<{tol:.0e})" for k, (v, tol) in checks.items()))
    assert ok
