"""Collapse the five dimension scores into one unified score.

The dimension matrix observed during development is standardized column by
column (population statistics), then projected onto the first principal
component of its covariance. The loading vector is sign-fixed so the
skewness coordinate is non-positive, which makes the unified score
orientation stable across refits: mostly-defect movements push the score in
a consistent direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dimensions import (
    DEFAULT_SKEW_SMOOTHING,
    DIMENSION_NAMES,
    SKEWNESS_INDEX,
    IntegrityConstraints,
    QualityVector,
    ReferenceSample,
    RobustZScoreDetector,
    score_all,
)
from .drift import Pdf
from .errors import FitError
from .validation import as_float_1d, as_float_2d, check_fitted
from .windowing import DataWindow

N_DIMENSIONS = len(DIMENSION_NAMES)

# Relative eigengap under which the principal direction is ill-determined.
DEGENERACY_RTOL = 1e-6


class QualityStandardizer(TransformerMixin, BaseEstimator):
    """Column-wise z-scoring with population (1/n) standard deviations.

    Columns with zero spread transform to exactly 0 rather than dividing by
    zero; a constant dimension carries no ranking information.
    """

    def __init__(self):
        self.means_: np.ndarray | None = None
        self.stds_: np.ndarray | None = None

    def fit(self, X, y=None) -> "QualityStandardizer":
        X = as_float_2d(X, "dimension matrix", min_rows=2)
        self.means_ = X.mean(axis=0)
        self.stds_ = X.std(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, ("means_", "stds_"))
        X = as_float_2d(X, "dimension matrix", min_rows=1, n_cols=self.means_.size)
        centered = X - self.means_
        out = np.zeros_like(centered)
        np.divide(centered, self.stds_, out=out, where=self.stds_ > 0)
        return out

    def transform_one(self, v) -> np.ndarray:
        """Standardize a single vector without the 2-D round trip."""
        check_fitted(self, ("means_", "stds_"))
        v = np.asarray(v, dtype=np.float64)
        centered = v - self.means_
        out = np.zeros_like(centered)
        np.divide(centered, self.stds_, out=out, where=self.stds_ > 0)
        return out

    def to_dict(self) -> dict:
        check_fitted(self, ("means_", "stds_"))
        return {"means": self.means_.tolist(), "stds": self.stds_.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "QualityStandardizer":
        st = cls()
        st.means_ = np.asarray(payload["means"], dtype=np.float64)
        st.stds_ = np.asarray(payload["stds"], dtype=np.float64)
        return st


class PrincipalScoreAggregator(TransformerMixin, BaseEstimator):
    """Projects standardized dimension vectors onto the first principal axis.

    Fitting computes the population covariance of the (already standardized)
    matrix and takes its top eigenvector, unit-norm, with the sign flipped if
    needed so the skewness loading is <= 0. ``degenerate_`` flags a top
    eigenpair whose gap to the second eigenvalue is below ``DEGENERACY_RTOL``
    relative to the leading eigenvalue; the projection is still usable but
    the direction is not uniquely determined by the data.
    """

    def __init__(self):
        self.loadings_: np.ndarray | None = None
        self.explained_variance_ratio_: float | None = None
        self.degenerate_: bool | None = None

    def fit(self, Z, y=None) -> "PrincipalScoreAggregator":
        Z = as_float_2d(Z, "standardized matrix", min_rows=2, n_cols=N_DIMENSIONS)
        centered = Z - Z.mean(axis=0)
        cov = centered.T @ centered / Z.shape[0]
        try:
            eigenvalues, eigenvectors = np.linalg.eigh(cov)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"eigendecomposition failed: {exc}") from exc
        # eigh returns ascending order
        top = eigenvectors[:, -1]
        lam1 = float(eigenvalues[-1])
        lam2 = float(eigenvalues[-2])
        if top[SKEWNESS_INDEX] > 0:
            top = -top
        norm = float(np.linalg.norm(top))
        if norm == 0.0:
            raise FitError("covariance produced a zero eigenvector")
        self.loadings_ = top / norm
        total = float(np.clip(eigenvalues, 0.0, None).sum())
        self.explained_variance_ratio_ = lam1 / total if total > 0 else 0.0
        self.degenerate_ = lam1 <= 0 or (lam1 - lam2) / lam1 < DEGENERACY_RTOL
        return self

    def transform(self, Z) -> np.ndarray:
        check_fitted(self, ("loadings_",))
        Z = as_float_2d(Z, "standardized matrix", min_rows=1, n_cols=N_DIMENSIONS)
        return Z @ self.loadings_

    def project_one(self, z) -> float:
        check_fitted(self, ("loadings_",))
        z = as_float_1d(z, "standardized vector")
        return float(z @ self.loadings_)

    def to_dict(self) -> dict:
        check_fitted(self, ("loadings_",))
        return {
            "loadings": self.loadings_.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio_,
            "degenerate": self.degenerate_,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PrincipalScoreAggregator":
        agg = cls()
        agg.loadings_ = np.asarray(payload["loadings"], dtype=np.float64)
        agg.explained_variance_ratio_ = float(payload["explained_variance_ratio"])
        agg.degenerate_ = bool(payload["degenerate"])
        return agg


@dataclass
class StandardScorer:
    """The full authoritative scoring path for a single window.

    Bundles the fitted artifacts the path needs: the anomaly detector,
    physical constraints, the reference sample and PDF for the two
    distributional dimensions, and the standardizer plus aggregator that
    collapse the quality vector to one number.
    """

    anomaly: RobustZScoreDetector
    constraints: IntegrityConstraints
    reference: ReferenceSample
    reference_pdf: Pdf
    standardizer: QualityStandardizer
    aggregator: PrincipalScoreAggregator
    skew_smoothing: float = DEFAULT_SKEW_SMOOTHING

    def quality(self, window: DataWindow) -> QualityVector:
        return score_all(
            window,
            self.anomaly,
            self.constraints,
            self.reference,
            self.reference_pdf,
            self.skew_smoothing,
        )

    def score(self, window: DataWindow) -> tuple[QualityVector, float]:
        """Return the quality vector and its unified projection."""
        qv = self.quality(window)
        z = self.standardizer.transform_one(qv.to_array())
        return qv, self.aggregator.project_one(z)
