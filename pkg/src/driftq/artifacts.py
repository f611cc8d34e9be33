"""The versioned artifact bundle produced by development and retraining.

A bundle holds everything deployment needs, versioned together: the fast
predictor, the standardizer and principal-axis aggregator, the anomaly
detector, the drift detector with its divergence history, the reference
sample and PDF behind the distributional dimensions, and the scored
training history that future retrains refit from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import PrincipalScoreAggregator, QualityStandardizer, StandardScorer
from .dimensions import IntegrityConstraints, QualityVector, ReferenceSample, RobustZScoreDetector
from .drift import JsdDriftDetector, Pdf
from .predictor import GradientBoostedScoreRegressor, OracleReport
from .windowing import DataWindow

TRIGGERS = ("initial", "drift_adaptation", "static_oracle_fail")


@dataclass(frozen=True)
class ModelVersion:
    """One link in the retrain chain.

    ``created_at`` is a stream-logical timestamp (the last reading timestamp
    seen when the version was fitted), not wall-clock time, so identical
    inputs produce byte-identical bundles.
    """

    version: int
    trigger: str
    created_at: int
    parent: int | None

    def __post_init__(self):
        if self.version < 1:
            raise ValueError(f"version must be >= 1, got {self.version}")
        if self.trigger not in TRIGGERS:
            raise ValueError(f"trigger must be one of {TRIGGERS}, got {self.trigger!r}")
        if self.trigger == "initial" and self.parent is not None:
            raise ValueError("the initial version cannot have a parent")
        if self.trigger != "initial" and self.parent is None:
            raise ValueError(f"trigger {self.trigger!r} requires a parent version")


@dataclass
class HistoryRow:
    """One training example: the raw window, its quality vector, its score."""

    window: DataWindow
    quality: QualityVector
    score: float


@dataclass
class ArtifactBundle:
    model: GradientBoostedScoreRegressor
    standardizer: QualityStandardizer
    aggregator: PrincipalScoreAggregator
    anomaly: RobustZScoreDetector
    detector: JsdDriftDetector
    reference: ReferenceSample
    reference_pdf: Pdf
    constraints: IntegrityConstraints
    skew_smoothing: float
    history: list[HistoryRow]
    version: ModelVersion
    dev_report: OracleReport | None = field(default=None, compare=False)

    @property
    def grid(self) -> np.ndarray:
        return self.reference_pdf.bin_edges

    def scorer(self) -> StandardScorer:
        """The authoritative scoring path over this bundle's artifacts."""
        return StandardScorer(
            anomaly=self.anomaly,
            constraints=self.constraints,
            reference=self.reference,
            reference_pdf=self.reference_pdf,
            standardizer=self.standardizer,
            aggregator=self.aggregator,
            skew_smoothing=self.skew_smoothing,
        )

    def quality_matrix(self) -> np.ndarray:
        return np.array([row.quality.to_array() for row in self.history], dtype=np.float64)
