"""Synthetic streams, replay experiments, and benchmark reports.

The generator models a repeating pump event: within each window the value
decays exponentially from a base pressure, plus gaussian noise. Configured
drift events permanently alter the regime (mean level, decay rate, or noise
scale) from a given window onward.

Experiments develop a bundle on the training prefix of the stream and
replay the rest through a scoring pipeline. Ground truth for evaluation is
computed for every window by an off-path authoritative scorer over the
pipeline's current artifacts; it is never part of the timed path. Reports
are bit-stable across runs except for wall-clock timing fields.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import Config, StreamConfig
from .errors import ConfigError, MetricError
from .orchestrator import MODES, ScoringPipeline, develop_phase
from .predictor import mae, r2
from .windowing import DataWindow, Reading, segment_stream

TIMING_FIELDS = ("elapsed_ns", "total_elapsed_ns")


def generate_pump_stream(cfg: StreamConfig) -> list[Reading]:
    """Deterministic synthetic stream of pump-pressure readings.

    Each window covers one pump event: base_pressure * exp(-decay_rate * t)
    for t in [0, 1) across the window, plus gaussian noise. Drift events
    apply cumulatively at the start of their window and persist.
    """
    rng = np.random.default_rng(cfg.seed)
    events: dict[int, list] = {}
    for ev in cfg.drift_events:
        events.setdefault(ev.window_index, []).append(ev)
    t = np.arange(cfg.window_len, dtype=np.float64) / cfg.window_len
    decay = cfg.decay_rate
    noise = cfg.noise_std
    level_shift = 0.0
    readings: list[Reading] = []
    ts = 0
    for widx in range(cfg.n_windows):
        for ev in events.get(widx, ()):
            if ev.kind == "mean_shift":
                level_shift += ev.magnitude
            elif ev.kind == "decay_change":
                decay += ev.magnitude
            else:  # noise_change
                noise = max(0.0, noise + ev.magnitude)
        base = cfg.base_pressure * np.exp(-decay * t) + level_shift
        values = base + rng.normal(0.0, 1.0, cfg.window_len) * noise
        for v in values:
            readings.append(Reading(ts, float(v)))
            ts += 1
    return readings


# ---------------------------------------------------------------------------
# Replay experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowRecord:
    """Evaluation record for one replayed window."""

    window_id: int
    truth: float
    prediction: float
    abs_error: float
    cum_mae: float
    cum_r2: float | None
    elapsed_ns: int
    drifted: bool
    p_value: float | None
    provenance: str
    model_version: int


@dataclass
class ExperimentReport:
    mode: str
    tau: float
    beta: int
    n_windows: int
    records: list[WindowRecord]
    summary: dict = field(default_factory=dict)

    def comparable_dict(self) -> dict:
        """Report as plain data with wall-clock timing fields zeroed."""
        records = []
        for rec in self.records:
            d = rec.__dict__.copy()
            d["elapsed_ns"] = 0
            records.append(d)
        summary = dict(self.summary)
        summary["total_elapsed_ns"] = 0
        return {
            "mode": self.mode,
            "tau": self.tau,
            "beta": self.beta,
            "n_windows": self.n_windows,
            "records": records,
            "summary": summary,
        }


def run_experiment(
    mode: str,
    config: Config,
    *,
    tau: float | None = None,
    beta: int | None = None,
    store_root: str | None = None,
) -> ExperimentReport:
    """Develop on the training prefix, replay the rest, evaluate everything.

    ``tau`` and ``beta`` override the engine settings so parameter studies
    need no config surgery. Per-window ground truth is computed off the
    timed path with the pipeline's current artifacts.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    engine = config.engine
    if tau is not None or beta is not None:
        engine = replace(
            engine,
            tau=engine.tau if tau is None else tau,
            beta=engine.beta if beta is None else beta,
        )
        config = replace(config, engine=engine)
    readings = generate_pump_stream(config.stream)
    windows = segment_stream(readings, engine.window_len)
    if len(windows) <= engine.train_windows:
        raise ConfigError(
            f"stream has {len(windows)} windows but train_windows={engine.train_windows} "
            "leaves nothing to replay"
        )
    train, deploy = windows[: engine.train_windows], windows[engine.train_windows :]
    bundle, _ = develop_phase(train, config)
    pipeline = ScoringPipeline(bundle, config, mode=mode, store_root=store_root)
    return replay(pipeline, deploy)


def replay(pipeline: ScoringPipeline, deploy: list[DataWindow]) -> ExperimentReport:
    """Push windows through a pipeline, collecting evaluation records.

    Window arrays are materialized before the timer starts: unpacking the
    readings is ingest work every mode pays identically, and folding it into
    the timed region would blur the per-path cost being measured.
    """
    truths: list[float] = []
    predictions: list[float] = []
    records: list[WindowRecord] = []
    total_ns = 0
    for window in deploy:
        window.present_values
        window.missing_count
        t0 = time.perf_counter_ns()
        scored = pipeline.process_window(window)
        elapsed = time.perf_counter_ns() - t0
        total_ns += elapsed
        truth = pipeline.standard_truth(window)
        truths.append(truth)
        predictions.append(scored.score)
        cum_mae = mae(truths, predictions)
        try:
            cum_r2 = r2(truths, predictions)
        except MetricError:
            cum_r2 = None
        records.append(
            WindowRecord(
                window_id=window.window_id,
                truth=truth,
                prediction=scored.score,
                abs_error=abs(scored.score - truth),
                cum_mae=cum_mae,
                cum_r2=cum_r2,
                elapsed_ns=elapsed,
                drifted=scored.drifted,
                p_value=scored.p_value,
                provenance=scored.provenance,
                model_version=scored.model_version,
            )
        )
    summary = {
        "mode": pipeline.mode,
        "tau": pipeline.engine.tau,
        "beta": pipeline.engine.beta,
        "n_windows": len(records),
        "final_mae": records[-1].cum_mae if records else None,
        "final_r2": records[-1].cum_r2 if records else None,
        "total_elapsed_ns": total_ns,
        "retrain_count": pipeline.retrain_count,
        "rollback_count": pipeline.rollback_count,
        "detections": list(pipeline.detections),
        "evaluation_count": len(pipeline.evaluations),
        "evaluation_failures": sum(1 for _, rep in pipeline.evaluations if not rep.passed),
        "versions": [v.version for v in pipeline.versions],
        "final_version": pipeline.bundle.version.version,
    }
    return ExperimentReport(
        mode=pipeline.mode,
        tau=pipeline.engine.tau,
        beta=pipeline.engine.beta,
        n_windows=len(records),
        records=records,
        summary=summary,
    )


# ---------------------------------------------------------------------------
# Sensitivity sweep
# ---------------------------------------------------------------------------

DEFAULT_SWEEP_TAUS = (0.03, 0.04, 0.06, 0.08, 0.09)


@dataclass
class SweepResult:
    taus: list[float]
    p_values: list[float | None]
    window_ids: list[int]
    detections: dict[float, list[int]]
    counts: dict[float, int]

    def to_json_dict(self) -> dict:
        return {
            "taus": self.taus,
            "counts": {repr(t): self.counts[t] for t in self.taus},
            "detections": {repr(t): self.detections[t] for t in self.taus},
        }


def sensitivity_sweep(taus, config: Config) -> SweepResult:
    """Evaluate many thresholds against one shared divergence replay.

    The detector runs once with no adaptation side effects, so every tau is
    judged against the identical p-value sequence; detections under a
    smaller tau are therefore a subset of detections under a larger one.
    """
    taus = sorted(float(t) for t in taus)
    if not taus:
        raise ConfigError("sweep needs at least one tau")
    for t in taus:
        if not 0.0 < t < 1.0:
            raise ConfigError(f"tau must be in (0, 1), got {t}")
    engine = config.engine
    readings = generate_pump_stream(config.stream)
    windows = segment_stream(readings, engine.window_len)
    if len(windows) <= engine.train_windows:
        raise ConfigError("stream too short for the configured training prefix")
    train, deploy = windows[: engine.train_windows], windows[engine.train_windows :]
    bundle, _ = develop_phase(train, config)
    detector = bundle.detector
    p_values: list[float | None] = []
    window_ids: list[int] = []
    for window in deploy:
        verdict = detector.observe(window)
        window_ids.append(window.window_id)
        p_values.append(verdict.p_value if verdict.warmed_up else None)
    detections = {
        t: [wid for wid, p in zip(window_ids, p_values) if p is not None and p < t]
        for t in taus
    }
    counts = {t: len(detections[t]) for t in taus}
    return SweepResult(
        taus=taus, p_values=p_values, window_ids=window_ids, detections=detections, counts=counts
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def emit_report(report: ExperimentReport, fmt: str) -> str:
    """Render a report as ``csv``, ``jsonl``, or ``summary-json`` text."""
    if fmt == "csv":
        return _report_csv(report)
    if fmt == "jsonl":
        return _report_jsonl(report)
    if fmt == "summary-json":
        return json.dumps(_jsonable(report.summary), sort_keys=True, indent=2) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


_CSV_COLUMNS = (
    "window_id",
    "truth",
    "prediction",
    "abs_error",
    "cum_mae",
    "cum_r2",
    "elapsed_ns",
    "drifted",
    "p_value",
    "provenance",
    "model_version",
)


def _report_csv(report: ExperimentReport) -> str:
    lines = [",".join(_CSV_COLUMNS)]
    for rec in report.records:
        row = []
        for col in _CSV_COLUMNS:
            value = getattr(rec, col)
            if value is None:
                row.append("")
            elif isinstance(value, bool):
                row.append("true" if value else "false")
            elif isinstance(value, float):
                row.append(repr(value))
            else:
                row.append(str(value))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _report_jsonl(report: ExperimentReport) -> str:
    out = []
    for rec in report.records:
        out.append(json.dumps(_jsonable(rec.__dict__), sort_keys=True))
    return "\n".join(out) + "\n" if out else ""


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None
    return value


def parse_report_csv(text: str) -> list[dict]:
    """Parse ``_report_csv`` output back into typed record dicts."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(_CSV_COLUMNS):
        raise ValueError("not a recognizable report CSV")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        rec = {}
        for col, cell in zip(_CSV_COLUMNS, cells):
            if cell == "":
                rec[col] = None
            elif col in ("window_id", "elapsed_ns", "model_version"):
                rec[col] = int(cell)
            elif col == "drifted":
                rec[col] = cell == "true"
            elif col == "provenance":
                rec[col] = cell
            else:
                rec[col] = float(cell)
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# Multi-mode bench
# ---------------------------------------------------------------------------


def run_bench(config: Config, modes=MODES) -> dict[str, ExperimentReport]:
    """Run every mode against the byte-identical generated stream.

    Each mode develops from the same training prefix with the same config,
    which is deterministic, so all modes see one stream and one initial
    bundle state.
    """
    reports = {}
    for mode in modes:
        reports[mode] = run_experiment(mode, config)
    return reports


def bench_comparison(reports: dict[str, ExperimentReport]) -> dict:
    """Cross-mode summary with speedups relative to the standard path."""
    summary = {mode: dict(rep.summary) for mode, rep in reports.items()}
    standard = reports.get("standard")
    if standard is not None:
        base = standard.summary["total_elapsed_ns"]
        for mode, rep in reports.items():
            total = rep.summary["total_elapsed_ns"]
            summary[mode]["speedup_vs_standard"] = (base / total) if total else None
    return summary
