"""Synthetic fault injection for development-time training data.

Each fault kind targets exactly one quality dimension: ``missing`` drives
completeness, ``outlier`` drives accuracy, ``out_of_range`` drives
consistency, ``shift`` drives timeliness, ``scale`` drives skewness.
Per-window randomness comes from a counter-based generator keyed by
(plan seed, window id), so outcomes are reproducible regardless of the
order or subset of windows processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .windowing import DataWindow, Reading

FAULT_KINDS = ("missing", "outlier", "out_of_range", "shift", "scale")


@dataclass(frozen=True)
class FaultIntensity:
    """Knobs for one fault kind; irrelevant fields are ignored per kind.

    - missing / outlier / out_of_range use ``fraction`` (share of readings hit)
    - outlier adds spikes of ``magnitude`` window standard deviations
    - out_of_range plants values ``margin`` beyond [range_min, range_max]
    - shift adds ``offset`` to every present value
    - scale multiplies every present value by ``factor`` (identity at 1.0)
    """

    fraction: float = 0.0
    magnitude: float = 0.0
    margin: float = 0.0
    offset: float = 0.0
    factor: float = 1.0
    range_min: float | None = None
    range_max: float | None = None


@dataclass(frozen=True)
class FaultRecord:
    """Ledger entry for one mutated window."""

    window_id: int
    kind: str
    params: dict

    def to_json_dict(self) -> dict:
        return {"window_id": self.window_id, "kind": self.kind, "params": self.params}


@dataclass(frozen=True)
class MutationPlan:
    """What to inject, how hard, and with which seed."""

    fault_fraction: float
    seed: int
    fault_mix: dict[str, float] = field(
        default_factory=lambda: {k: 1.0 for k in FAULT_KINDS}
    )
    intensities: dict[str, FaultIntensity] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.fault_fraction <= 1.0:
            raise ConfigError(f"fault_fraction must be in [0, 1], got {self.fault_fraction}")
        for kind in list(self.fault_mix) + list(self.intensities):
            if kind not in FAULT_KINDS:
                raise ConfigError(f"unknown fault kind {kind!r}; expected one of {FAULT_KINDS}")
        if any(w < 0 for w in self.fault_mix.values()):
            raise ConfigError("fault_mix weights must be non-negative")
        if self.fault_fraction > 0 and sum(self.fault_mix.values()) <= 0:
            raise ConfigError("fault_mix has no positive weight but fault_fraction > 0")

    def intensity_for(self, kind: str) -> FaultIntensity:
        return self.intensities.get(kind, FaultIntensity())


def window_rng(seed: int, window_id: int) -> np.random.Generator:
    """Counter-based generator: same (seed, window id) -> same draws, always."""
    return np.random.Generator(np.random.Philox(key=seed, counter=window_id))


def mutate_window(
    window: DataWindow,
    kind: str,
    intensity: FaultIntensity,
    rng: np.random.Generator,
) -> DataWindow:
    """Apply one fault kind to a window, returning a new window.

    The window id, length, and terminal flag never change; only values do.
    Degenerate intensities (zero fraction, zero offset, unit factor) return
    an identical window.
    """
    if kind not in FAULT_KINDS:
        raise ValueError(f"unknown fault kind {kind!r}")
    values = [r.value for r in window.readings]
    if kind == "missing":
        k = _share(intensity.fraction, len(values))
        if k > 0:
            for i in rng.choice(len(values), size=k, replace=False):
                values[i] = None
    elif kind == "outlier":
        present = [i for i, v in enumerate(values) if v is not None]
        k = _share(intensity.fraction, len(present))
        if k > 0 and intensity.magnitude != 0.0:
            sigma = float(np.std([values[i] for i in present]))
            if sigma == 0.0:
                sigma = 1.0
            hit = rng.choice(len(present), size=k, replace=False)
            signs = rng.integers(0, 2, size=k) * 2 - 1
            for j, sign in zip(hit, signs):
                i = present[j]
                values[i] = values[i] + float(sign) * intensity.magnitude * sigma
    elif kind == "out_of_range":
        if intensity.range_min is None or intensity.range_max is None:
            raise ConfigError("out_of_range faults need range_min and range_max set")
        present = [i for i, v in enumerate(values) if v is not None]
        k = _share(intensity.fraction, len(present))
        if k > 0:
            hit = rng.choice(len(present), size=k, replace=False)
            high_side = rng.integers(0, 2, size=k)
            for j, high in zip(hit, high_side):
                i = present[j]
                if high:
                    values[i] = intensity.range_max + intensity.margin
                else:
                    values[i] = intensity.range_min - intensity.margin
    elif kind == "shift":
        values = [v if v is None else v + intensity.offset for v in values]
    else:  # scale
        values = [v if v is None else v * intensity.factor for v in values]
    readings = tuple(
        Reading(r.timestamp, v) for r, v in zip(window.readings, values)
    )
    return DataWindow(window_id=window.window_id, readings=readings, terminal=window.terminal)


def _share(fraction: float, n: int) -> int:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    return int(round(fraction * n))


def apply_mutation_plan(
    windows: list[DataWindow],
    plan: MutationPlan,
) -> tuple[list[DataWindow], list[FaultRecord]]:
    """Independently select and mutate windows per the plan.

    Returns the (possibly) mutated windows in order plus the fault ledger.
    A window appears in the ledger iff its output differs from its input;
    selections whose mutation happens to be a no-op are dropped so the
    ledger stays an exact witness of what changed.
    """
    kinds = [k for k in FAULT_KINDS if plan.fault_mix.get(k, 0.0) > 0]
    weights = np.array([plan.fault_mix[k] for k in kinds], dtype=np.float64)
    if weights.size:
        weights = weights / weights.sum()
    out: list[DataWindow] = []
    ledger: list[FaultRecord] = []
    for window in windows:
        rng = window_rng(plan.seed, window.window_id)
        if rng.random() >= plan.fault_fraction or not kinds:
            out.append(window)
            continue
        kind = kinds[int(rng.choice(len(kinds), p=weights))]
        intensity = plan.intensity_for(kind)
        mutant = mutate_window(window, kind, intensity, rng)
        if mutant == window:
            out.append(window)
            continue
        out.append(mutant)
        ledger.append(
            FaultRecord(
                window_id=window.window_id,
                kind=kind,
                params=_intensity_params(kind, intensity),
            )
        )
    return out, ledger


def _intensity_params(kind: str, intensity: FaultIntensity) -> dict:
    if kind == "missing":
        return {"fraction": intensity.fraction}
    if kind == "outlier":
        return {"fraction": intensity.fraction, "magnitude": intensity.magnitude}
    if kind == "out_of_range":
        return {
            "fraction": intensity.fraction,
            "margin": intensity.margin,
            "range_min": intensity.range_min,
            "range_max": intensity.range_max,
        }
    if kind == "shift":
        return {"offset": intensity.offset}
    return {"factor": intensity.factor}
