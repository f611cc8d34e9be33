"""Development phase and the three deployment scoring pipelines.

Development mutates the training windows, scores every window through the
authoritative path, fits the aggregation artifacts and the fast predictor
(with a held-out oracle gate), and assembles version 1 of the bundle.

Deployment routes each incoming window by mode:

- ``standard``: always the authoritative path; never retrains.
- ``static``: always the fast predictor; every beta-th window is also
  standard-scored out of band and the prediction checked against it, with a
  failed check triggering re-scoring and a retrain.
- ``adaptive``: the drift detector watches every window; on drift the
  reference is re-baselined to recent data, history is re-scored, the model
  retrains from scratch, and the triggering window gets an authoritative
  score. Otherwise the fast predictor answers.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .aggregation import PrincipalScoreAggregator, QualityStandardizer, StandardScorer
from .artifacts import ArtifactBundle, HistoryRow, ModelVersion
from .config import Config, EngineConfig, GBTParams
from .dimensions import (
    QualityVector,
    ReferenceSample,
    RobustZScoreDetector,
    score_all,
    score_skewness,
    score_timeliness,
)
from .drift import DriftVerdict, JsdDriftDetector, estimate_pdf, jsd, make_grid
from .errors import DevelopmentError, DriftqError
from .mutation import FaultRecord, apply_mutation_plan
from .predictor import GradientBoostedScoreRegressor, OracleReport, extract_features, oracle_check
from .store import store_save
from .windowing import DataWindow

logger = logging.getLogger(__name__)

MODES = ("adaptive", "static", "standard")

ROUTE_ML = "ml_score"
ROUTE_ADAPT = "adapt_then_score"
ROUTE_EVALUATE = "standard_evaluate"
ROUTE_STANDARD = "standard_score"


@dataclass(frozen=True)
class ScoredWindow:
    """One emitted score with its provenance and drift context."""

    window_id: int
    score: float
    provenance: str
    model_version: int
    drifted: bool
    p_value: float | None
    quality: QualityVector | None = None
    divergence: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "window_id": self.window_id,
            "score": self.score,
            "provenance": self.provenance,
            "model_version": self.model_version,
            "drifted": self.drifted,
            "p_value": self.p_value,
        }


# ---------------------------------------------------------------------------
# Development phase
# ---------------------------------------------------------------------------


def develop_phase(
    windows: list[DataWindow], config: Config
) -> tuple[ArtifactBundle, list[FaultRecord]]:
    """Build version 1 of the artifact bundle from a training stream."""
    engine = config.engine
    if len(windows) < 10:
        raise DevelopmentError(f"need at least 10 training windows, got {len(windows)}")

    mutated, ledger = apply_mutation_plan(windows, config.mutation)
    mutated_ids = {rec.window_id for rec in ledger}
    clean_windows = [w for w in mutated if w.window_id not in mutated_ids]
    clean_values = (
        np.concatenate([w.present_values for w in clean_windows if w.present_values.size])
        if clean_windows
        else np.array([], dtype=np.float64)
    )
    if clean_values.size < 2:
        raise DevelopmentError("the unmutated portion of the training stream is empty")

    grid = make_grid(clean_values, engine.bins, engine.grid_pad_fraction)
    reference = ReferenceSample(strided_subsample(clean_values, engine.reference_sample_size))
    anomaly = RobustZScoreDetector(cutoff=engine.anomaly_cutoff).fit(clean_values)
    skew_pdf = estimate_pdf(reference.values, grid, engine.skew_smoothing)
    detector = JsdDriftDetector(
        tau=engine.tau, min_history=engine.min_history, smoothing=engine.drift_smoothing
    ).fit(reference.values, grid)
    # Seed the empirical null with the divergences of the full training
    # stream, injected faults included. Isolated quality defects are routine
    # operating conditions, not regime changes; keeping them in the null
    # means the p-value test only fires on divergences beyond anything the
    # training stream produced.
    for w in mutated:
        if w.present_values.size:
            wpdf = estimate_pdf(w.present_values, grid, engine.drift_smoothing)
            detector.record(jsd(detector.reference_pdf_, wpdf))

    qualities = [
        score_all(w, anomaly, engine.constraints, reference, skew_pdf, engine.skew_smoothing)
        for w in mutated
    ]
    matrix = np.array([q.to_array() for q in qualities], dtype=np.float64)
    standardizer = QualityStandardizer().fit(matrix)
    aggregator = PrincipalScoreAggregator().fit(standardizer.transform(matrix))
    scores = aggregator.transform(standardizer.transform(matrix))
    history = [
        HistoryRow(window=w, quality=q, score=float(s))
        for w, q, s in zip(mutated, qualities, scores)
    ]

    features = np.array(
        [extract_features(w, engine.constraints) for w in mutated], dtype=np.float64
    )
    model, dev_report = _fit_dev_model(features, scores, engine)

    created_at = max(r.timestamp for w in windows for r in w.readings) if windows else 0
    bundle = ArtifactBundle(
        model=model,
        standardizer=standardizer,
        aggregator=aggregator,
        anomaly=anomaly,
        detector=detector,
        reference=reference,
        reference_pdf=skew_pdf,
        constraints=engine.constraints,
        skew_smoothing=engine.skew_smoothing,
        history=history,
        version=ModelVersion(version=1, trigger="initial", created_at=created_at, parent=None),
        dev_report=dev_report,
    )
    return bundle, ledger


def _fit_dev_model(
    features: np.ndarray, scores: np.ndarray, engine: EngineConfig
) -> tuple[GradientBoostedScoreRegressor, OracleReport]:
    """Fit the predictor against a held-out oracle, growing capacity on failure."""
    oracle = engine.dev_oracle
    step = max(2, round(1.0 / oracle.holdout_fraction))
    idx = np.arange(features.shape[0])
    hold_mask = (idx + 1) % step == 0
    if not hold_mask.any() or hold_mask.all():
        raise DevelopmentError(
            f"holdout split is degenerate for {features.shape[0]} windows "
            f"at fraction {oracle.holdout_fraction}"
        )
    x_train, y_train = features[~hold_mask], scores[~hold_mask]
    x_hold, y_hold = features[hold_mask], scores[hold_mask]

    params = engine.gbt
    report: OracleReport | None = None
    for attempt in range(max(1, oracle.max_rounds)):
        n_trees = params.n_trees * (2**attempt)
        model = GradientBoostedScoreRegressor(
            n_trees=n_trees,
            max_depth=params.max_depth,
            learning_rate=params.learning_rate,
            min_samples_leaf=params.min_samples_leaf,
            seed=params.seed,
        ).fit(x_train, y_train)
        report = oracle_check(y_hold, model.predict(x_hold), oracle.metric, oracle.threshold)
        if report.passed:
            return model, report
        logger.info(
            "development oracle unmet at %d trees (%s); growing capacity", n_trees, report.reason
        )
    raise DevelopmentError(
        f"development oracle unmet after {oracle.max_rounds} rounds: {report.reason}"
    )


def strided_subsample(values: np.ndarray, size: int) -> np.ndarray:
    """Deterministic evenly-strided subsample preserving temporal spread."""
    values = np.asarray(values, dtype=np.float64)
    if values.size <= size:
        return values.copy()
    idx = (np.arange(size) * values.size) // size
    return values[idx]


# ---------------------------------------------------------------------------
# Re-scoring and retraining
# ---------------------------------------------------------------------------


def rescore_history(
    history: list[HistoryRow],
    reference: ReferenceSample,
    reference_pdf,
    skew_smoothing: float,
) -> tuple[list[HistoryRow], list[dict[str, float]]]:
    """Recompute the reference-dependent dimensions of every history row.

    Accuracy, completeness, and consistency do not depend on the reference,
    so they are carried over verbatim and their deltas are exactly zero.
    Returns new rows plus one per-row delta mapping (new minus old).
    """
    new_rows: list[HistoryRow] = []
    deltas: list[dict[str, float]] = []
    for row in history:
        old = row.quality
        if row.window.present_values.size == 0:
            new_t, new_s = 1.0, 1.0
        else:
            new_t = score_timeliness(row.window, reference)
            new_s = score_skewness(row.window, reference_pdf, skew_smoothing)
        new_q = QualityVector(
            accuracy=old.accuracy,
            completeness=old.completeness,
            consistency=old.consistency,
            timeliness=new_t,
            skewness=new_s,
        )
        new_rows.append(HistoryRow(window=row.window, quality=new_q, score=row.score))
        deltas.append(
            {
                "accuracy": 0.0,
                "completeness": 0.0,
                "consistency": 0.0,
                "timeliness": new_t - old.timeliness,
                "skewness": new_s - old.skewness,
            }
        )
    return new_rows, deltas


def refit_from_history(
    history: list[HistoryRow],
    constraints,
    model_params: GBTParams,
) -> tuple[QualityStandardizer, PrincipalScoreAggregator, GradientBoostedScoreRegressor, list[HistoryRow]]:
    """Refit standardizer, projection, and predictor from scratch on history.

    The unified score of every history row is recomputed under the new
    standardizer and loadings before the predictor is trained on them.
    """
    if len(history) < 2:
        raise DevelopmentError("retraining needs at least 2 history rows")
    matrix = np.array([row.quality.to_array() for row in history], dtype=np.float64)
    standardizer = QualityStandardizer().fit(matrix)
    aggregator = PrincipalScoreAggregator().fit(standardizer.transform(matrix))
    scores = aggregator.transform(standardizer.transform(matrix))
    new_rows = [
        HistoryRow(window=row.window, quality=row.quality, score=float(s))
        for row, s in zip(history, scores)
    ]
    features = np.array(
        [extract_features(row.window, constraints) for row in new_rows], dtype=np.float64
    )
    model = GradientBoostedScoreRegressor(
        n_trees=model_params.n_trees,
        max_depth=model_params.max_depth,
        learning_rate=model_params.learning_rate,
        min_samples_leaf=model_params.min_samples_leaf,
        seed=model_params.seed,
    ).fit(features, scores)
    return standardizer, aggregator, model, new_rows


# ---------------------------------------------------------------------------
# Deployment pipelines
# ---------------------------------------------------------------------------


class ScoringPipeline:
    """Single-writer deployment loop over one artifact bundle.

    The pipeline mutates its bundle in place on adaptation; keep one writer
    per bundle. When ``store_root`` is set, every retrained version is
    persisted as it is created.
    """

    def __init__(
        self,
        bundle: ArtifactBundle,
        config: Config,
        mode: str,
        store_root: str | None = None,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.bundle = bundle
        self.engine = config.engine
        self.mode = mode
        self.store_root = store_root
        self.chunk_counter = 0
        self.recent: deque[DataWindow] = deque(maxlen=self.engine.recent_buffer_cap)
        self.versions: list[ModelVersion] = [bundle.version]
        self.detections: list[int] = []
        self.retrain_count = 0
        self.rollback_count = 0
        self.evaluations: list[tuple[int, OracleReport]] = []
        self.last_rescore_deltas: list[dict[str, float]] | None = None
        self._scorer: StandardScorer = bundle.scorer()
        self._last_timestamp = bundle.version.created_at

    # -- routing ---------------------------------------------------------

    def activate(self, window: DataWindow, verdict: DriftVerdict | None) -> str:
        """Pick the processing route for one window under the current state."""
        if self.mode == "standard":
            return ROUTE_STANDARD
        if self.mode == "static":
            if self.chunk_counter + 1 >= self.engine.beta:
                return ROUTE_EVALUATE
            return ROUTE_ML
        if verdict is not None and verdict.drifted:
            return ROUTE_ADAPT
        return ROUTE_ML

    # -- processing --------------------------------------------------------

    def process_window(self, window: DataWindow) -> ScoredWindow:
        if window.n == 0:
            raise ValueError("cannot process a zero-length window")
        if window.readings:
            self._last_timestamp = window.readings[-1].timestamp
        verdict = self.bundle.detector.observe(window) if self.mode == "adaptive" else None
        route = self.activate(window, verdict)
        if route == ROUTE_STANDARD:
            return self._process_standard(window)
        if route == ROUTE_ADAPT:
            return self._process_adapt(window, verdict)
        if route == ROUTE_EVALUATE:
            return self._process_static(window, evaluate=True)
        if self.mode == "static":
            return self._process_static(window, evaluate=False)
        return self._process_ml(window, verdict)

    def _process_standard(self, window: DataWindow) -> ScoredWindow:
        quality, score = self._scorer.score(window)
        return ScoredWindow(
            window_id=window.window_id,
            score=score,
            provenance="standard",
            model_version=self.bundle.version.version,
            drifted=False,
            p_value=None,
            quality=quality,
        )

    def _process_ml(self, window: DataWindow, verdict: DriftVerdict | None) -> ScoredWindow:
        prediction = self._predict(window)
        self.recent.append(window)
        return ScoredWindow(
            window_id=window.window_id,
            score=prediction,
            provenance="ml",
            model_version=self.bundle.version.version,
            drifted=False,
            p_value=verdict.p_value if verdict else None,
            divergence=verdict.divergence if verdict else None,
        )

    def _process_static(self, window: DataWindow, evaluate: bool) -> ScoredWindow:
        prediction = self._predict(window)
        self.recent.append(window)
        self.chunk_counter += 1
        out = ScoredWindow(
            window_id=window.window_id,
            score=prediction,
            provenance="ml",
            model_version=self.bundle.version.version,
            drifted=False,
            p_value=None,
        )
        if evaluate:
            self.chunk_counter = 0
            _, truth = self._scorer.score(window)
            report = oracle_check(
                [truth], [prediction], self.engine.tolerance.metric, self.engine.tolerance.max
            )
            self.evaluations.append((window.window_id, report))
            if not report.passed:
                logger.info(
                    "static checkpoint failed at window %d (%s); adapting",
                    window.window_id,
                    report.reason,
                )
                self._adapt("static_oracle_fail")
        return out

    def _process_adapt(self, window: DataWindow, verdict: DriftVerdict) -> ScoredWindow:
        self.detections.append(window.window_id)
        self._adapt("drift_adaptation", trigger_window=window)
        quality, score = self._scorer.score(window)
        self.bundle.history.append(HistoryRow(window=window, quality=quality, score=score))
        self._trim_history()
        return ScoredWindow(
            window_id=window.window_id,
            score=score,
            provenance="standard",
            model_version=self.bundle.version.version,
            drifted=True,
            p_value=verdict.p_value,
            quality=quality,
            divergence=verdict.divergence,
        )

    def standard_truth(self, window: DataWindow) -> float:
        """Authoritative score under the current artifacts; no side effects."""
        return self._scorer.score(window)[1]

    def _predict(self, window: DataWindow) -> float:
        features = extract_features(window, self.bundle.constraints)
        return self.bundle.model.predict_one(features)

    # -- adaptation --------------------------------------------------------

    def _adapt(self, trigger: str, trigger_window: DataWindow | None = None) -> None:
        """Re-baseline to recent data, re-score history, retrain, persist.

        Any failure rolls the bundle back to its pre-adaptation state so the
        stream keeps flowing on the old artifacts.
        """
        bundle = self.bundle
        snapshot = (
            bundle.model,
            bundle.standardizer,
            bundle.aggregator,
            bundle.reference,
            bundle.reference_pdf,
            bundle.detector.reference_pdf_,
            list(bundle.history),
            bundle.version,
        )
        try:
            pool = list(self.recent)
            if trigger_window is not None:
                pool.append(trigger_window)
            recent_pool = pool[-self.engine.rebaseline_window_count :]
            values = [w.present_values for w in recent_pool if w.present_values.size]
            raw = np.concatenate(values) if values else np.array([], dtype=np.float64)
            if raw.size >= 2:
                new_reference = ReferenceSample(
                    strided_subsample(raw, self.engine.reference_sample_size)
                )
            else:
                new_reference = bundle.reference
            new_skew_pdf = estimate_pdf(
                new_reference.values, bundle.grid, self.engine.skew_smoothing
            )

            new_history, deltas = rescore_history(
                bundle.history, new_reference, new_skew_pdf, self.engine.skew_smoothing
            )
            bundle.reference = new_reference
            bundle.reference_pdf = new_skew_pdf
            bundle.detector.rebaseline(new_reference.values)

            # Newly collected windows get authoritative scores under the new
            # reference and join the training history before the refit.
            for w in self.recent:
                quality = score_all(
                    w,
                    bundle.anomaly,
                    bundle.constraints,
                    new_reference,
                    new_skew_pdf,
                    self.engine.skew_smoothing,
                )
                new_history.append(HistoryRow(window=w, quality=quality, score=0.0))
            bundle.history = new_history
            self._trim_history()

            params = GBTParams(
                n_trees=bundle.model.n_trees,
                max_depth=bundle.model.max_depth,
                learning_rate=bundle.model.learning_rate,
                min_samples_leaf=bundle.model.min_samples_leaf,
                seed=bundle.model.seed,
            )
            standardizer, aggregator, model, rows = refit_from_history(
                bundle.history, bundle.constraints, params
            )
            bundle.standardizer = standardizer
            bundle.aggregator = aggregator
            bundle.model = model
            bundle.history = rows
            bundle.version = ModelVersion(
                version=bundle.version.version + 1,
                trigger=trigger,
                created_at=self._last_timestamp,
                parent=bundle.version.version,
            )
            self.versions.append(bundle.version)
            self.retrain_count += 1
            self.last_rescore_deltas = deltas
            self.recent.clear()
            self._scorer = bundle.scorer()
            if self.store_root is not None:
                store_save(bundle, self.store_root)
            logger.info(
                "retrained to version %d (trigger=%s, history=%d rows)",
                bundle.version.version,
                trigger,
                len(bundle.history),
            )
        except DriftqError as exc:
            (
                bundle.model,
                bundle.standardizer,
                bundle.aggregator,
                bundle.reference,
                bundle.reference_pdf,
                bundle.detector.reference_pdf_,
                bundle.history,
                bundle.version,
            ) = snapshot
            self._scorer = bundle.scorer()
            self.rollback_count += 1
            logger.warning("adaptation failed (%s); rolled back to version %d",
                           exc, bundle.version.version)

    def _trim_history(self) -> None:
        cap = self.engine.history_cap
        if cap is not None and len(self.bundle.history) > cap:
            del self.bundle.history[: len(self.bundle.history) - cap]
