"""Named experiments: each writes its CSV series and returns what the manifest needs."""

import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, classical, io, otoc
from .otoc import PerturbationKind


@dataclass
class RunResult:
    files: list = field(default_factory=list)
    plots: list = field(default_factory=list)  # (csv, kind, x, y)
    guard_events: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    truncated: bool = False
    message: str = ""


def _events(evts):
    return [dict(step=e.step, leg=e.leg, edge_fraction=e.edge_fraction, norm_drift=e.norm_drift, reason=e.reason)
            for e in evts]


def _try_fit(fits, name, fn, *args, **kw):
    try:
        res = fn(*args, **kw)
    except analysis.FitError as exc:
        fits[name] = {"error": str(exc)}
        return None
    fits[name] = res.to_dict()
    return res


def _otoc_series(config, out, A, guard_mode):
    series = otoc.otoc(config, A, PerturbationKind.MOMENTUM, guard_mode=guard_mode)
    name = config.experiment
    rows = [(r.t, r.C, r.C1, r.C2, r.ReC3, r.norm_tilde, r.mean_energy) for r in series.records]
    path = io.write_csv(os.path.join(out, f"{name}.csv"), io.CSV_SCHEMAS[name], rows)
    res = RunResult([path], [(path, "log-linear", "t", "C")])
    for r in series.records:
        res.guard_events += _events(r.guard_events)
    if series.truncated:
        res.truncated = True
        res.message = series.message
        res.guard_events.append({"step": series.exhausted_at, "leg": "series", "reason": series.message})
    if series.records:
        dom = otoc.dominance_report(series)
        dpath = io.write_csv(os.path.join(out, f"{name}-dominance.csv"), ["t", "C2_over_C1", "absReC3_over_C1", "dominant"],
                             [(d.t, d.c2_ratio, d.c3_ratio, d.dominant) for d in dom])
        res.files.append(dpath)
        C = series.column("C")
        if np.all(C > 0):
            gamma = analysis.gamma_theory(config.g, config.hbar)
            _try_fit(res.fits, "super_exponential", analysis.fit_super_exponential, series.t, np.log(C),
                     skip=config.fit_skip, gamma=gamma, g=config.g, hbar=config.hbar)
    return res


def run_quantum_otoc(config, out):
    return _otoc_series(config, out, PerturbationKind.MOMENTUM, "halt")


def run_theta_otoc(config, out):
    # the theta-perturbed state always carries a |p|^-2 tail: record, do not halt
    return _otoc_series(config, out, PerturbationKind.ANGLE, "record")


def _sensitivity(config, out, method):
    s = classical.run_sensitivity(config, method=method)
    name = config.experiment
    rows = list(zip(s.t, s.log_Ccl, s.lam, s.overflow_flag))
    path = io.write_csv(os.path.join(out, f"{name}.csv"), io.CSV_SCHEMAS[name], rows)
    res = RunResult([path])
    gamma = analysis.gamma_theory(config.g, config.hbar)
    res.fits["gamma_theory"] = {"params": {"gamma": gamma}}
    if method == "finite-difference":
        res.plots.append((path, "tsquared", "t", "lnCcl"))
        _try_fit(res.fits, "lnCcl_vs_t2", analysis.fit_linear, s.t.astype(float) ** 2, s.log_Ccl,
                 skip=config.fit_skip)
    else:
        res.plots.append((path, "linear", "t", "lambda"))
        _try_fit(res.fits, "lambda_linear", analysis.fit_linear, s.t, s.lam, window=chaotic_window(s.t, s.lam))
    return res


def chaotic_window(t, lam):
    """From the first kick with a positive exponent to the end of the series."""
    pos = np.nonzero(np.asarray(lam) > 0)[0]
    t = np.asarray(t)
    if pos.size == 0:
        return (float(t[0]), float(t[-1]))
    return (float(t[pos[0]]), float(t[-1]))


def run_classical_otoc(config, out):
    return _sensitivity(config, out, config.sensitivity)


def run_lyapunov(config, out):
    return _sensitivity(config, out, "tangent")


def run_phase_portrait(config, out):
    snaps = classical.phase_portrait(config)
    rows = []
    for t in sorted(snaps):
        th, p = snaps[t]
        rows.extend((t, a, b) for a, b in zip(th, p))
    path = io.write_csv(os.path.join(out, "portrait.csv"), io.CSV_SCHEMAS["portrait"], rows)
    return RunResult([path], [(path, "scatter", "theta", "p")])


def run_scaling(config, out):
    cells = otoc.scaling_sweep(config.g_list, config.N_list, config.t_star, config)
    rows = [(c.g, c.N, c.C_tstar, c.ntilde, c.ptilde2, c.exhausted) for c in cells]
    path = io.write_csv(os.path.join(out, "scaling.csv"), io.CSV_SCHEMAS["scaling"], rows)
    res = RunResult([path], [(path, "log-log", "N", "C_tstar")])
    for c in cells:
        if c.exhausted:
            res.guard_events.append({"g": c.g, "N": c.N, "reason": "edge mass above threshold (cell kept, flagged)"})
    try:
        fits = otoc.fit_scaling(cells)
    except ValueError as exc:
        res.fits["scaling"] = {"error": str(exc)}
    else:
        for g, f in fits.items():
            res.fits[f"g={g}:C"] = f["C"].to_dict()
            res.fits[f"g={g}:ptilde2"] = f["ptilde2"].to_dict()
    return res


def run_semiclassical(config, out):
    s = classical.semiclassical_compare(config)
    keep = s.quantum_valid
    rows = list(zip(s.t[keep], s.C[keep], s.hbar2_Ccl[keep]))
    path = io.write_csv(os.path.join(out, "semiclassical.csv"), io.CSV_SCHEMAS["semiclassical"], rows)
    res = RunResult([path], [(path, "log-linear", "t", "C")])
    if not keep.all():
        res.truncated = True
        res.message = s.message
        res.guard_events.append({"leg": "quantum", "reason": s.message})
    return res


def run_echo_trace(config, out):
    tr = otoc.energy_trace_experiment(config)
    rows = [(k, "forward", e, n) for k, (e, n) in enumerate(zip(tr.forward_energy, tr.forward_norm))]
    rows += [(k, "backward", e, n) for k, (e, n) in enumerate(zip(tr.backward_energy, tr.backward_norm))]
    path = io.write_csv(os.path.join(out, "echo-trace.csv"), io.CSV_SCHEMAS["echo-trace"], rows)
    res = RunResult([path], [(path, "log-linear", "step", "energy")], _events(tr.guard_events))
    gt = analysis.gamma_tilde(config.g, config.hbar, tr.ntilde)
    res.fits["theory"] = {"params": {"ntilde": tr.ntilde, "ptilde2": tr.ptilde2, "theta_moment": tr.theta_moment,
                                     "gamma_tilde": gt}}
    _try_fit(res.fits, "backward_rate", analysis.fit_exponential_rate, np.arange(len(tr.backward_energy)),
             tr.backward_energy, skip=0)
    return res


def run_fit(config, out):
    try:
        header, cols = io.read_csv(config.fit_input)
    except OSError as exc:
        raise ValueError(f"cannot read fit input {config.fit_input}: {exc.strerror}") from None
    res = RunResult()
    if "C" in cols and "t" in cols:
        C = cols["C"]
        gamma = analysis.gamma_theory(config.g, config.hbar)
        f = _try_fit(res.fits, "super_exponential", analysis.fit_super_exponential, cols["t"], np.log(C),
                     skip=config.fit_skip, gamma=gamma, g=config.g, hbar=config.hbar)
    elif "lnCcl" in cols:
        f = _try_fit(res.fits, "lnCcl_vs_t2", analysis.fit_linear, cols["t"] ** 2, cols["lnCcl"], skip=config.fit_skip)
    elif "energy" in cols:
        m = cols["leg"] == "forward"
        f = _try_fit(res.fits, "energy_rate", analysis.fit_exponential_rate, cols["step"][m], cols["energy"][m],
                     skip=config.fit_skip)
    else:
        raise ValueError(f"{config.fit_input}: no fittable series (header {','.join(header)})")
    if f is None:
        (name, info), = res.fits.items()
        raise ValueError(f"{config.fit_input}: {name} fit failed: {info['error']}")
    rows = [(k, v, f.stderr.get(k, np.nan)) for k, v in f.params.items() if np.isscalar(v)]
    rows.append(("r_squared", f.r_squared, np.nan))
    path = io.write_csv(os.path.join(out, "fit.csv"), io.CSV_SCHEMAS["fit"], rows)
    res.files.append(path)
    return res


REGISTRY = {
    "quantum-otoc": run_quantum_otoc,
    "theta-otoc": run_theta_otoc,
    "classical-otoc": run_classical_otoc,
    "lyapunov": run_lyapunov,
    "phase-portrait": run_phase_portrait,
    "scaling": run_scaling,
    "semiclassical": run_semiclassical,
    "echo-trace": run_echo_trace,
    "fit": run_fit,
}
