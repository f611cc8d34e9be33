"""Engine, mutation, and stream configuration.

One YAML file configures everything: the ``engine`` section holds the
scoring and adaptation knobs, ``mutation`` the development-time fault plan,
and ``stream`` the synthetic generator used by the bench tooling. Every
key has a default; unknown keys are rejected so typos fail loudly instead
of silently running with defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any

import yaml

from .dimensions import DEFAULT_ANOMALY_CUTOFF, DEFAULT_SKEW_SMOOTHING, IntegrityConstraints
from .drift import DEFAULT_BINS, DEFAULT_PAD_FRACTION
from .errors import ConfigError
from .mutation import FAULT_KINDS, FaultIntensity, MutationPlan


@dataclass(frozen=True)
class GBTParams:
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 3
    seed: int = 7


@dataclass(frozen=True)
class DevOracle:
    """Held-out acceptance bar the development phase must clear."""

    metric: str = "r2"
    threshold: float = 0.9
    max_rounds: int = 3
    holdout_fraction: float = 0.2


@dataclass(frozen=True)
class Tolerance:
    """Static-mode checkpoint tolerance on |prediction - standard score|."""

    metric: str = "mae"
    max: float = 0.75


@dataclass(frozen=True)
class EngineConfig:
    window_len: int = 200
    bins: int = DEFAULT_BINS
    grid_pad_fraction: float = DEFAULT_PAD_FRACTION
    drift_smoothing: float = 0.0
    skew_smoothing: float = DEFAULT_SKEW_SMOOTHING
    tau: float = 0.03
    beta: int = 50
    min_history: int = 30
    anomaly_cutoff: float = DEFAULT_ANOMALY_CUTOFF
    min_value: float = 0.0
    max_value: float = 130.0
    reference_sample_size: int = 2000
    recent_buffer_cap: int = 200
    rebaseline_window_count: int = 30
    history_cap: int | None = None
    train_windows: int = 300
    gbt: GBTParams = field(default_factory=GBTParams)
    dev_oracle: DevOracle = field(default_factory=DevOracle)
    tolerance: Tolerance = field(default_factory=Tolerance)

    def __post_init__(self):
        if self.window_len < 1:
            raise ConfigError(f"window_len must be >= 1, got {self.window_len}")
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must be in (0, 1), got {self.tau}")
        if self.beta < 1:
            raise ConfigError(f"beta must be >= 1, got {self.beta}")
        if self.min_history < 1:
            raise ConfigError(f"min_history must be >= 1, got {self.min_history}")
        if self.min_value > self.max_value:
            raise ConfigError("min_value exceeds max_value")
        if self.reference_sample_size < 2:
            raise ConfigError("reference_sample_size must be >= 2")
        if self.train_windows < 10:
            raise ConfigError("train_windows must be >= 10")
        if self.dev_oracle.metric not in ("mae", "r2"):
            raise ConfigError(f"dev_oracle.metric must be 'mae' or 'r2', got {self.dev_oracle.metric!r}")
        if self.tolerance.metric not in ("mae", "r2"):
            raise ConfigError(f"tolerance.metric must be 'mae' or 'r2', got {self.tolerance.metric!r}")
        if not 0.0 < self.dev_oracle.holdout_fraction < 1.0:
            raise ConfigError("dev_oracle.holdout_fraction must be in (0, 1)")

    @property
    def constraints(self) -> IntegrityConstraints:
        return IntegrityConstraints(self.min_value, self.max_value)


@dataclass(frozen=True)
class DriftEvent:
    """A regime change injected into the synthetic stream at one window."""

    window_index: int
    kind: str
    magnitude: float

    def __post_init__(self):
        if self.kind not in ("mean_shift", "decay_change", "noise_change"):
            raise ConfigError(f"unknown drift event kind {self.kind!r}")


@dataclass(frozen=True)
class StreamConfig:
    n_windows: int = 1000
    window_len: int = 200
    base_pressure: float = 100.0
    decay_rate: float = 3.0
    noise_std: float = 2.0
    seed: int = 1234
    drift_events: tuple[DriftEvent, ...] = ()

    def __post_init__(self):
        if self.n_windows < 1 or self.window_len < 1:
            raise ConfigError("n_windows and window_len must be >= 1")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")


@dataclass(frozen=True)
class Config:
    engine: EngineConfig = field(default_factory=EngineConfig)
    mutation: MutationPlan = field(
        default_factory=lambda: _default_mutation_plan(EngineConfig())
    )
    stream: StreamConfig = field(default_factory=StreamConfig)


def _default_mutation_plan(engine: EngineConfig) -> MutationPlan:
    return MutationPlan(
        fault_fraction=0.3,
        seed=99,
        fault_mix={k: 1.0 for k in FAULT_KINDS},
        intensities={
            "missing": FaultIntensity(fraction=0.3),
            "outlier": FaultIntensity(fraction=0.05, magnitude=6.0),
            "out_of_range": FaultIntensity(
                fraction=0.1,
                margin=10.0,
                range_min=engine.min_value,
                range_max=engine.max_value,
            ),
            "shift": FaultIntensity(offset=15.0),
            "scale": FaultIntensity(factor=1.4),
        },
    )


def default_config() -> Config:
    return Config()


def load_config(path: str) -> Config:
    """Parse a YAML config file, applying defaults for absent keys."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from exc
    if raw is None:
        return default_config()
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> Config:
    _reject_unknown(raw, ("engine", "mutation", "stream"), "top level")
    engine = _engine_from_dict(raw.get("engine") or {})
    mutation = _mutation_from_dict(raw.get("mutation") or {}, engine)
    stream = _stream_from_dict(raw.get("stream") or {})
    return Config(engine=engine, mutation=mutation, stream=stream)


def _engine_from_dict(section: dict) -> EngineConfig:
    known = {f.name for f in fields(EngineConfig)}
    _reject_unknown(section, known, "engine")
    kwargs: dict[str, Any] = dict(section)
    try:
        if "gbt" in kwargs:
            _reject_unknown(kwargs["gbt"], {f.name for f in fields(GBTParams)}, "engine.gbt")
            kwargs["gbt"] = GBTParams(**kwargs["gbt"])
        if "dev_oracle" in kwargs:
            _reject_unknown(
                kwargs["dev_oracle"], {f.name for f in fields(DevOracle)}, "engine.dev_oracle"
            )
            kwargs["dev_oracle"] = DevOracle(**kwargs["dev_oracle"])
        if "tolerance" in kwargs:
            _reject_unknown(
                kwargs["tolerance"], {f.name for f in fields(Tolerance)}, "engine.tolerance"
            )
            kwargs["tolerance"] = Tolerance(**kwargs["tolerance"])
        return EngineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad engine section: {exc}") from exc


def _mutation_from_dict(section: dict, engine: EngineConfig) -> MutationPlan:
    _reject_unknown(section, ("fault_fraction", "seed", "fault_mix", "intensity"), "mutation")
    defaults = _default_mutation_plan(engine)
    fault_fraction = section.get("fault_fraction", defaults.fault_fraction)
    seed = section.get("seed", defaults.seed)
    fault_mix = dict(section.get("fault_mix", defaults.fault_mix))
    intensities = dict(defaults.intensities)
    for kind, knobs in (section.get("intensity") or {}).items():
        if kind not in FAULT_KINDS:
            raise ConfigError(f"mutation.intensity has unknown kind {kind!r}")
        _reject_unknown(
            knobs,
            ("fraction", "magnitude", "margin", "offset", "factor", "range_min", "range_max"),
            f"mutation.intensity.{kind}",
        )
        base = intensities.get(kind, FaultIntensity())
        merged = {
            "fraction": base.fraction,
            "magnitude": base.magnitude,
            "margin": base.margin,
            "offset": base.offset,
            "factor": base.factor,
            "range_min": base.range_min,
            "range_max": base.range_max,
        }
        merged.update(knobs)
        intensities[kind] = FaultIntensity(**merged)
    oob = intensities.get("out_of_range")
    if oob is not None and (oob.range_min is None or oob.range_max is None):
        intensities["out_of_range"] = FaultIntensity(
            fraction=oob.fraction,
            magnitude=oob.magnitude,
            margin=oob.margin,
            offset=oob.offset,
            factor=oob.factor,
            range_min=engine.min_value,
            range_max=engine.max_value,
        )
    try:
        return MutationPlan(
            fault_fraction=fault_fraction, seed=seed, fault_mix=fault_mix, intensities=intensities
        )
    except TypeError as exc:
        raise ConfigError(f"bad mutation section: {exc}") from exc


def _stream_from_dict(section: dict) -> StreamConfig:
    known = {f.name for f in fields(StreamConfig)}
    _reject_unknown(section, known, "stream")
    kwargs: dict[str, Any] = dict(section)
    try:
        if "drift_events" in kwargs:
            events = []
            for ev in kwargs["drift_events"] or ():
                _reject_unknown(ev, ("window_index", "kind", "magnitude"), "stream.drift_events[]")
                events.append(DriftEvent(**ev))
            kwargs["drift_events"] = tuple(events)
        return StreamConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad stream section: {exc}") from exc


def _reject_unknown(section: Any, known, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} section must be a mapping")
    unknown = sorted(set(section) - set(known))
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")
