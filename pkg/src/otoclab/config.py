"""Experiment configuration: one JSON document per run, with key overrides."""

import json
from dataclasses import asdict, dataclass, field, fields

EXPERIMENTS = (
    "quantum-otoc",
    "theta-otoc",
    "classical-otoc",
    "lyapunov",
    "phase-portrait",
    "scaling",
    "semiclassical",
    "echo-trace",
    "fit",
)
KICK_SOURCES = ("quantum-mean-field", "ensemble-density")
BACKWARD_MODES = ("self-consistent", "replay")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "quantum-otoc"
    hbar: float = 0.6
    g: float = 1.5
    sigma: float = 1.0
    N: int = 16384
    t_max: int = 12
    t_star: int = 7
    ensemble_size: int = 10000
    delta_theta0: float = 1e-5
    seed: int = 20240601
    kick_source: str = "quantum-mean-field"
    kde_bandwidth: float = 0.05
    output_dir: str = "runs"
    g_list: list = field(default_factory=lambda: [0.4, 0.5, 0.6])
    N_list: list = field(default_factory=lambda: [4096, 8192, 16384, 32768])
    times: list = field(default_factory=lambda: [3, 5, 15])
    backward: str = "self-consistent"
    sensitivity: str = "finite-difference"
    edge_mass_threshold: float = 1e-8
    norm_drift_threshold: float = 1e-9
    fit_input: str = ""
    fit_skip: int = 2

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)} (got {self.experiment!r})")
        for name in ("hbar", "sigma", "delta_theta0", "edge_mass_threshold", "norm_drift_threshold"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{name} must be a positive number (got {v!r})")
        if not isinstance(self.g, (int, float)) or self.g < 0:
            raise ConfigError(f"g must be a non-negative number (got {self.g!r})")
        for name in ("N", *(("N_list",) if self.experiment == "scaling" else ())):
            vals = getattr(self, name)
            for v in vals if isinstance(vals, list) else [vals]:
                if not isinstance(v, int) or v < 8 or v % 2:
                    raise ConfigError(f"{name}: N must be an even integer >= 8 (got {v!r})")
        for name in ("t_max", "t_star", "ensemble_size"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer (got {v!r})")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer (got {self.seed!r})")
        if self.kick_source not in KICK_SOURCES:
            raise ConfigError(f"kick_source must be one of {KICK_SOURCES} (got {self.kick_source!r})")
        if self.backward not in BACKWARD_MODES:
            raise ConfigError(f"backward must be one of {BACKWARD_MODES} (got {self.backward!r})")
        if self.sensitivity not in ("finite-difference", "tangent"):
            raise ConfigError(f"sensitivity must be finite-difference or tangent (got {self.sensitivity!r})")
        if self.experiment == "fit" and not self.fit_input:
            raise ConfigError("fit experiment needs fit_input (path to a series CSV)")
        return self

    def to_dict(self):
        return asdict(self)

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return from_dict(d)


def from_dict(d):
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**d)


def parse_override(text):
    """``key=value`` with the value parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value (got {text!r})")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path=None, overrides=(), experiment=None):
    d = {}
    if path:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    for item in overrides:
        k, v = parse_override(item)
        d[k] = v
    if experiment is not None:
        d["experiment"] = experiment
    return from_dict(d).validate()
