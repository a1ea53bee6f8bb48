"""Experiment configuration: dataclass, text parsing, validation.

Configs are plain-text key-value documents (`key = value`, # comments).
Unknown keys are rejected; constraint violations name the offending field.
parse_config(serialize_config(cfg)) round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

MODELS = ("passive", "inertial", "colored", "modified")
INTEGRATORS = ("splitting", "euler")
INITIAL_CONDITIONS = ("origin", "uniform_cell")  # plus explicit point lists

_MODELS_WITH_TAU = ("inertial", "modified")


class ConfigError(ValueError):
    """Invalid configuration; message names the field or line."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulation run."""

    model: str
    field: str
    dt: float
    horizon: float
    n_paths: int
    seed: int
    integrator: str = "splitting"
    sigma: float | None = None
    tau: float | None = None
    corr_time: float | None = None
    snapshot_times: tuple[float, ...] | None = None
    initial_condition: str | tuple[tuple[float, ...], ...] = "uniform_cell"

    def noise_amplitude(self) -> float:
        """sigma, except the modified model where the noise is sqrt(tau)."""
        if self.model == "modified":
            return float(self.tau) ** 0.5
        return float(self.sigma)


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep: names the swept key and its values."""

    parameter: str
    values: tuple[float, ...]
    fit_entry: str = "k11"   # which K entry the power-law fit targets

    def __post_init__(self):
        if self.parameter not in ("sigma", "tau", "corr_time", "dt"):
            raise ConfigError(f"cannot sweep parameter {self.parameter!r}")
        if len(self.values) < 2:
            raise ConfigError("sweep needs at least 2 values")
        if any(v <= 0 for v in self.values):
            raise ConfigError(f"sweep values for {self.parameter} must be positive")
        if self.fit_entry not in ("k11", "k22"):
            raise ConfigError("fit_entry must be 'k11' or 'k22'")

    def configs(self, base: ExperimentConfig) -> list[ExperimentConfig]:
        return [replace(base, **{self.parameter: v}) for v in self.values]


_KEYS = {
    "model": str,
    "integrator": str,
    "field": str,
    "sigma": float,
    "tau": float,
    "corr_time": float,
    "dt": float,
    "T": float,
    "paths": int,
    "seed": int,
    "snapshots": "times",
    "initial": "initial",
}


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.model not in MODELS:
        raise ConfigError(f"model: unknown model {cfg.model!r}; one of {MODELS}")
    if cfg.integrator not in INTEGRATORS:
        raise ConfigError(f"integrator: unknown integrator {cfg.integrator!r}")
    if cfg.model in ("colored", "modified") and cfg.integrator == "euler":
        raise ConfigError(f"integrator: euler is not available for the {cfg.model} model")
    if cfg.dt <= 0:
        raise ConfigError("dt: must be > 0")
    if cfg.horizon <= 0:
        raise ConfigError("T: must be > 0")
    if cfg.dt >= cfg.horizon:
        raise ConfigError("dt: must be smaller than the horizon T")
    if cfg.n_paths < 1:
        raise ConfigError("paths: must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed: must fit in 64 bits")

    if cfg.model in _MODELS_WITH_TAU:
        if cfg.tau is None:
            raise ConfigError(f"tau: required for model {cfg.model!r}")
        if cfg.tau <= 0:
            raise ConfigError("tau: must be > 0")
    elif cfg.tau is not None:
        raise ConfigError(f"tau: not a parameter of model {cfg.model!r}")

    if cfg.model == "colored":
        if cfg.corr_time is None:
            raise ConfigError("corr_time: required for the colored model")
        if cfg.corr_time <= 0:
            raise ConfigError("corr_time: must be > 0")
    elif cfg.corr_time is not None:
        raise ConfigError(f"corr_time: not a parameter of model {cfg.model!r}")

    if cfg.model == "modified":
        sqrt_tau = float(cfg.tau) ** 0.5
        if cfg.sigma is not None and abs(cfg.sigma - sqrt_tau) > 1e-12:
            raise ConfigError("sigma: the modified model fixes sigma = sqrt(tau); "
                              "omit sigma or set it consistently")
    else:
        if cfg.sigma is None:
            raise ConfigError(f"sigma: required for model {cfg.model!r}")
        if cfg.sigma < 0:
            raise ConfigError("sigma: must be >= 0")

    if cfg.snapshot_times is not None:
        times = tuple(float(t) for t in cfg.snapshot_times)
        if any(t <= 0 for t in times):
            raise ConfigError("snapshots: times must be positive")
        if list(times) != sorted(set(times)):
            raise ConfigError("snapshots: times must be strictly increasing")
        if times[-1] > cfg.horizon:
            raise ConfigError("snapshots: times cannot exceed the horizon T")

    ic = cfg.initial_condition
    if isinstance(ic, str):
        if ic not in INITIAL_CONDITIONS:
            raise ConfigError(f"initial: unknown initial condition {ic!r}")
    else:
        if not ic or any(len(p) == 0 for p in ic):
            raise ConfigError("initial: explicit point list cannot be empty")
    return cfg


def parse_config(text: str, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Parse a key-value document, apply `key=value` overrides, validate."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _KEYS:
            raise ConfigError(f"override: unknown key {key!r}")
        raw[key] = value.strip()
    return _build_config(raw)


def _build_config(raw: dict[str, str]) -> ExperimentConfig:
    for required in ("model", "field", "dt", "T", "paths", "seed"):
        if required not in raw:
            raise ConfigError(f"{required}: missing required key")

    def conv(key, kind):
        value = raw[key]
        try:
            if kind is float:
                return float(value)
            if kind is int:
                return int(value)
            return value
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}")

    kwargs = dict(
        model=conv("model", str),
        field=conv("field", str),
        dt=conv("dt", float),
        horizon=conv("T", float),
        n_paths=conv("paths", int),
        seed=conv("seed", int),
    )
    if "integrator" in raw:
        kwargs["integrator"] = conv("integrator", str)
    for key in ("sigma", "tau", "corr_time"):
        if key in raw:
            kwargs[key] = conv(key, float)
    if "snapshots" in raw:
        try:
            kwargs["snapshot_times"] = tuple(float(tok) for tok in raw["snapshots"].split(","))
        except ValueError:
            raise ConfigError(f"snapshots: cannot parse {raw['snapshots']!r}")
    if "initial" in raw:
        kwargs["initial_condition"] = _parse_initial(raw["initial"])
    return validate_config(ExperimentConfig(**kwargs))


def _parse_initial(value: str):
    if value in INITIAL_CONDITIONS:
        return value
    points = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            points.append(tuple(float(tok) for tok in chunk.split(",")))
        except ValueError:
            raise ConfigError(f"initial: cannot parse point {chunk!r}")
    if not points:
        raise ConfigError(f"initial: cannot parse {value!r}")
    return tuple(points)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Text document that parse_config maps back to `cfg`."""
    lines = [
        f"model = {cfg.model}",
        f"integrator = {cfg.integrator}",
        f"field = {cfg.field}",
        f"dt = {cfg.dt!r}",
        f"T = {cfg.horizon!r}",
        f"paths = {cfg.n_paths}",
        f"seed = {cfg.seed}",
    ]
    for key, value in (("sigma", cfg.sigma), ("tau", cfg.tau), ("corr_time", cfg.corr_time)):
        if value is not None:
            lines.append(f"{key} = {value!r}")
    if cfg.snapshot_times is not None:
        lines.append("snapshots = " + ",".join(repr(t) for t in cfg.snapshot_times))
    ic = cfg.initial_condition
    if isinstance(ic, str):
        lines.append(f"initial = {ic}")
    else:
        lines.append("initial = " + "; ".join(",".join(repr(c) for c in p) for p in ic))
    return "\n".join(lines) + "\n"
