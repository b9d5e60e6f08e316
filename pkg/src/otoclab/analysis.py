"""Theory rates and least-squares fits for growth laws, tails and scaling."""

from dataclasses import dataclass, field

import numpy as np

from .grid import Distribution


class FitError(ValueError):
    pass


@dataclass
class FitResult:
    params: dict
    covariance: np.ndarray
    r_squared: float
    window: tuple
    stderr: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    n_points: int = 0

    def __getitem__(self, key):
        return self.params[key]

    def to_dict(self):
        return {
            "params": {k: float(v) for k, v in self.params.items()},
            "stderr": {k: float(v) for k, v in self.stderr.items()},
            "covariance": np.asarray(self.covariance).tolist(),
            "r_squared": float(self.r_squared),
            "window": [float(w) for w in self.window],
            "flags": list(self.flags),
            "n_points": int(self.n_points),
        }


# theory

def gamma_theory(g, hbar, norm=1.0):
    """ln(1 + (g norm / (pi hbar))^2)."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    return float(np.log1p((g * norm / (np.pi * hbar)) ** 2))


def gamma_tilde(g, hbar, ntilde):
    return gamma_theory(g, hbar, ntilde)


def gamma_tplus(g, hbar, norm_tplus):
    return gamma_theory(g, hbar, norm_tplus)


@dataclass(frozen=True)
class TheoryRates:
    gamma0: float
    gamma_tilde: float
    gamma_tplus: float


def theory_rates(g, hbar, norm0=1.0, ntilde=None, norm_tplus=None):
    return TheoryRates(
        gamma_theory(g, hbar, norm0),
        gamma_tilde(g, hbar, ntilde) if ntilde is not None else np.nan,
        gamma_tplus(g, hbar, norm_tplus) if norm_tplus is not None else np.nan,
    )


def log_coupling(g, hbar):
    """ln (g / (pi hbar))^2, the known multiplier of the linear-in-t term."""
    return float(2.0 * np.log(g / (np.pi * hbar)))


# least squares core

def _ols(X, y, names, window, min_points):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    if n < min_points:
        raise FitError(f"need at least {min_points} points, got {n}")
    if np.linalg.matrix_rank(X) < k:
        raise FitError("degenerate design matrix")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res <= 1e-300 else 0.0)
    r2 = min(max(r2, 0.0), 1.0)
    dof = n - k
    s2 = ss_res / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(dict(zip(names, coef)), cov, r2, window, dict(zip(names, se)), [], n)


def _windowed(t, y, skip, window):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise FitError("t and y must have the same shape")
    if window is not None:
        lo, hi = window
        m = (t >= lo) & (t <= hi)
    else:
        m = np.ones(t.size, dtype=bool)
        m[: int(skip)] = False
    m &= np.isfinite(y)
    if not m.any():
        raise FitError("empty fit window")
    tw = t[m]
    return tw, y[m], (float(tw.min()), float(tw.max()))


def fit_linear(x, y, window=None, skip=0, min_points=3):
    """Ordinary least squares y = intercept + slope x."""
    xw, yw, win = _windowed(x, y, skip, window)
    X = np.column_stack([np.ones_like(xw), xw])
    return _ols(X, yw, ("intercept", "slope"), win, min_points)


def fit_exponential_rate(t, values, skip=2, window=None):
    """Rate of ln(values) vs t; the first ``skip`` points are excluded by default."""
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        raise FitError("exponential fit needs strictly positive values")
    res = fit_linear(t, np.log(v), window, skip)
    res.params["rate"] = res.params["slope"]
    res.stderr["rate"] = res.stderr["slope"]
    return res


def fit_super_exponential(t, lnC, skip=2, window=None, gamma=None, g=None, hbar=None, min_points=5):
    """Quadratic fit lnC = a + b t + c t^2.

    With ``gamma`` given, eta = c / gamma.  With ``g`` and ``hbar`` given, the
    known coupling L = ln(g / (pi hbar))^2 is stored so that b can later be
    split as alpha gamma + beta L across curves (:func:`disentangle_prefactors`).
    Flags ``not super-exponential`` when c is not at least 3 standard errors
    above zero.
    """
    tw, yw, win = _windowed(t, lnC, skip, window)
    X = np.column_stack([np.ones_like(tw), tw, tw ** 2])
    res = _ols(X, yw, ("a", "b", "c"), win, min_points)
    c, se = res.params["c"], res.stderr["c"]
    scale = max(np.max(np.abs(yw)), 1.0)
    if c <= 3.0 * se or c <= 1e-12 * scale:
        res.flags.append("not super-exponential")
    if gamma is not None:
        res.params["gamma"] = float(gamma)
        if gamma > 0:
            res.params["eta"] = c / gamma
            res.stderr["eta"] = se / gamma
    if g is not None and hbar is not None and g > 0:
        res.params["log_coupling"] = log_coupling(g, hbar)
    return res


def disentangle_prefactors(fits):
    """Solve b_g = alpha gamma_g + beta L_g across several quadratic fits.

    Each fit must carry ``gamma`` and ``log_coupling``; returns alpha, beta and
    per-curve eta = c_g / gamma_g.
    """
    rows = [(f.params["gamma"], f.params["log_coupling"], f.params["b"]) for f in fits]
    if len(rows) < 2:
        raise FitError("need at least two curves to separate alpha and beta")
    A = np.array([[r[0], r[1]] for r in rows])
    b = np.array([r[2] for r in rows])
    res = _ols(A, b, ("alpha", "beta"), (0.0, float(len(rows) - 1)), 2)
    res.params["eta"] = [f.params["c"] / f.params["gamma"] for f in fits]
    return res


def convexity_check(y):
    """Second differences of y and whether they are all positive."""
    y = np.asarray(y, dtype=float)
    d2 = np.diff(y, 2)
    return bool(d2.size > 0 and np.all(d2 > 0)), d2


# distribution tails

def _tail_data(dist, window, floor, exclude_edge):
    if isinstance(dist, Distribution):
        x, w = np.abs(dist.coords), dist.values
    else:
        x, w = np.abs(np.asarray(dist[0], float)), np.asarray(dist[1], float)
    if window is None:
        order = np.argsort(x, kind="stable")
        cum = np.cumsum(w[order])
        lo = x[order][np.searchsorted(cum, 0.9 * cum[-1])]
        hi = (1.0 - exclude_edge) * x.max()
        window = (float(lo), float(hi))
    lo, hi = window
    m = (x >= lo) & (x <= hi) & (x > 0) & (w > floor * w.max())
    return x[m], w[m], window


def fit_power_law(dist, window=None, floor=1e-25, exclude_edge=0.05, r2_min=0.99):
    """Exponent of |psi(p)|^2 ~ |p|^a over the tail window.

    The default window runs from the momentum below which 90% of the weight
    lies up to ``1 - exclude_edge`` of the largest |p| (outer modes are
    truncation-contaminated).
    """
    x, w, win = _tail_data(dist, window, floor, exclude_edge)
    if np.unique(x).size < 3:
        raise FitError("tail window too small")
    res = fit_linear(np.log(x), np.log(w), min_points=3)
    res.window = win
    res.params["exponent"] = res.params["slope"]
    res.stderr["exponent"] = res.stderr["slope"]
    if res.r_squared < r2_min:
        res.flags.append("poor power-law fit")
    return res


def fit_localization_length(dist, window=None, floor=1e-25, exclude_edge=0.05, r2_min=0.9):
    """xi from |psi(p)|^2 ~ exp(-|p| / xi) over the tail window."""
    x, w, win = _tail_data(dist, window, floor, exclude_edge)
    if np.unique(x).size < 3:
        raise FitError("tail window too small")
    res = fit_linear(x, np.log(w), min_points=3)
    res.window = win
    slope = res.params["slope"]
    if slope < 0 and abs(slope) > 1e-12:
        res.params["xi"] = -1.0 / slope
        res.stderr["xi"] = res.stderr["slope"] / slope ** 2
    else:
        res.params["xi"] = np.inf
        res.flags.append("divergent localization length")
    if res.r_squared < r2_min and "divergent localization length" not in res.flags:
        res.flags.append("poor exponential fit")
    return res


def fit_proportional(x, y):
    """Least squares y = k x through the origin."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return _ols(x[:, None], y, ("k",), (float(x.min()), float(x.max())), 1)
