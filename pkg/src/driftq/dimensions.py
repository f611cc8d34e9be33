"""Per-window quality dimensions.

Five raw scores are computed for every window, each in [0, 1]:

- accuracy: fraction of readings flagged anomalous by a robust z-score rule
- completeness: fraction of readings that are missing
- consistency: fraction of readings that are present and inside the
  configured physical range (the only higher-is-better dimension)
- timeliness: exact two-sample Kolmogorov-Smirnov statistic between the
  window and a reference sample of historical values
- skewness: base-2 Jensen-Shannon divergence between the window PDF and a
  reference PDF on the same bin grid

Accuracy, completeness, timeliness, and skewness are defect-oriented
(higher means worse); consistency is the opposite. The orientation is fixed
per dimension and exposed as ``HIGHER_IS_BETTER``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .drift import Pdf, estimate_pdf, jsd
from .errors import WindowScoreError
from .validation import as_float_1d, check_fitted
from .windowing import DataWindow

DIMENSION_NAMES = ("accuracy", "completeness", "consistency", "timeliness", "skewness")
HIGHER_IS_BETTER = {
    "accuracy": False,
    "completeness": False,
    "consistency": True,
    "timeliness": False,
    "skewness": False,
}
SKEWNESS_INDEX = DIMENSION_NAMES.index("skewness")

# Scale factor that makes the median absolute deviation a consistent
# estimator of the standard deviation under normality.
MAD_SCALE = 1.4826

DEFAULT_ANOMALY_CUTOFF = 3.5
DEFAULT_SKEW_SMOOTHING = 1e-6


@dataclass(frozen=True)
class IntegrityConstraints:
    """Inclusive physical bounds a present value must respect."""

    min_value: float
    max_value: float

    def __post_init__(self):
        if self.min_value > self.max_value:
            raise ValueError(
                f"min_value {self.min_value} exceeds max_value {self.max_value}"
            )

    def contains(self, values: np.ndarray) -> np.ndarray:
        return (values >= self.min_value) & (values <= self.max_value)


@dataclass(frozen=True)
class ReferenceSample:
    """Historical raw values the timeliness score compares against."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", as_float_1d(self.values, "reference values"))


@dataclass(frozen=True)
class QualityVector:
    """The five dimension scores for one window, each in [0, 1]."""

    accuracy: float
    completeness: float
    consistency: float
    timeliness: float
    skewness: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.accuracy, self.completeness, self.consistency, self.timeliness, self.skewness],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, arr) -> "QualityVector":
        a = as_float_1d(arr, "quality array")
        if a.size != len(DIMENSION_NAMES):
            raise ValueError(f"expected {len(DIMENSION_NAMES)} scores, got {a.size}")
        return cls(*[float(v) for v in a])

    @classmethod
    def sentinel(cls) -> "QualityVector":
        """All-defect vector used for windows with no present values."""
        return cls(accuracy=0.0, completeness=1.0, consistency=0.0, timeliness=1.0, skewness=1.0)


class RobustZScoreDetector(BaseEstimator):
    """Point-anomaly detector based on the scaled median absolute deviation.

    A value x is anomalous when |x - median| / (1.4826 * MAD) exceeds
    ``cutoff``. When the reference MAD is zero the rule degenerates to
    flagging any value different from the median.
    """

    def __init__(self, cutoff: float = DEFAULT_ANOMALY_CUTOFF):
        self.cutoff = cutoff
        self.ref_median_: float | None = None
        self.ref_mad_: float | None = None

    def fit(self, values) -> "RobustZScoreDetector":
        if self.cutoff <= 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")
        arr = as_float_1d(values, "reference values")
        med = float(np.median(arr))
        self.ref_median_ = med
        self.ref_mad_ = float(np.median(np.abs(arr - med)))
        return self

    def is_anomalous(self, values) -> np.ndarray:
        """Boolean mask of anomalous entries; empty input gives an empty mask."""
        check_fitted(self, ("ref_median_", "ref_mad_"))
        arr = as_float_1d(values, "values", allow_empty=True)
        if arr.size == 0:
            return np.zeros(0, dtype=bool)
        if self.ref_mad_ == 0.0:
            return arr != self.ref_median_
        z = np.abs(arr - self.ref_median_) / (MAD_SCALE * self.ref_mad_)
        return z > self.cutoff

    def to_dict(self) -> dict:
        check_fitted(self, ("ref_median_", "ref_mad_"))
        return {"cutoff": self.cutoff, "ref_median": self.ref_median_, "ref_mad": self.ref_mad_}

    @classmethod
    def from_dict(cls, payload: dict) -> "RobustZScoreDetector":
        det = cls(cutoff=float(payload["cutoff"]))
        det.ref_median_ = float(payload["ref_median"])
        det.ref_mad_ = float(payload["ref_mad"])
        return det


# ---------------------------------------------------------------------------
# Dimension scorers
# ---------------------------------------------------------------------------


def score_accuracy(window: DataWindow, detector: RobustZScoreDetector) -> float:
    """Fraction of the window's readings that are anomalous present values."""
    _require_nonempty(window)
    flags = detector.is_anomalous(window.present_values)
    return float(np.count_nonzero(flags)) / window.n


def score_completeness(window: DataWindow) -> float:
    """Fraction of the window's readings that are missing."""
    _require_nonempty(window)
    return window.missing_count / window.n


def score_consistency(window: DataWindow, constraints: IntegrityConstraints) -> float:
    """Fraction of readings that are present and inside the physical range."""
    _require_nonempty(window)
    values = window.present_values
    if values.size == 0:
        return 0.0
    return float(np.count_nonzero(constraints.contains(values))) / window.n


def score_timeliness(window: DataWindow, reference: ReferenceSample) -> float:
    """Exact two-sample KS statistic between the window and the reference.

    Both empirical CDFs are evaluated at every point of the combined sample,
    which realizes the supremum exactly for step functions.
    """
    values = window.present_values
    if values.size == 0:
        raise WindowScoreError("timeliness", "window has no present values")
    xs = np.sort(values)
    rs = np.sort(reference.values)
    grid = np.concatenate([xs, rs])
    f_win = np.searchsorted(xs, grid, side="right") / xs.size
    f_ref = np.searchsorted(rs, grid, side="right") / rs.size
    return float(np.max(np.abs(f_win - f_ref)))


def score_skewness(
    window: DataWindow,
    reference_pdf: Pdf,
    smoothing: float = DEFAULT_SKEW_SMOOTHING,
) -> float:
    """Base-2 JSD between the window PDF and the reference PDF.

    The window PDF is estimated on the reference's own bin grid with the
    same smoothing pseudo-count the reference was built with.
    """
    values = window.present_values
    if values.size == 0:
        raise WindowScoreError("skewness", "window has no present values")
    window_pdf = estimate_pdf(values, reference_pdf.bin_edges, smoothing)
    return jsd(window_pdf, reference_pdf)


def score_all(
    window: DataWindow,
    detector: RobustZScoreDetector,
    constraints: IntegrityConstraints,
    reference: ReferenceSample,
    reference_pdf: Pdf,
    skew_smoothing: float = DEFAULT_SKEW_SMOOTHING,
) -> QualityVector:
    """All five dimension scores for one window.

    A window with zero present values cannot support the distributional
    scores, so it maps to the fixed all-defect sentinel vector instead of
    aborting the stream.
    """
    _require_nonempty(window)
    if window.present_values.size == 0:
        return QualityVector.sentinel()
    return QualityVector(
        accuracy=score_accuracy(window, detector),
        completeness=score_completeness(window),
        consistency=score_consistency(window, constraints),
        timeliness=score_timeliness(window, reference),
        skewness=score_skewness(window, reference_pdf, skew_smoothing),
    )


def _require_nonempty(window: DataWindow) -> None:
    if window.n == 0:
        raise WindowScoreError("window", "window has zero readings")
