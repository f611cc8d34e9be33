"""Fast-path score prediction from cheap window statistics.

The expensive scoring path needs reference samples, histogram PDFs, and an
eigenprojection. The predictor replaces all of that with a small
gradient-boosted tree ensemble over eleven summary features that can be
computed from the raw window alone. The ensemble is written from scratch:
squared loss, exact greedy variance-reduction splits, deterministic
tie-breaking, no subsampling, so a fit is a pure function of its inputs and
serialized models are byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .dimensions import IntegrityConstraints
from .errors import FitError, MetricError
from .validation import as_float_1d, as_float_2d, check_fitted
from .windowing import DataWindow

FEATURE_NAMES = (
    "mean",
    "std",
    "min",
    "max",
    "median",
    "q25",
    "q75",
    "missing_fraction",
    "out_of_range_fraction",
    "lag1_autocorr",
    "n_present",
)
N_FEATURES = len(FEATURE_NAMES)

MODEL_FORMAT_VERSION = 1

# Relative improvement below which a split is considered pure noise.
_MIN_GAIN = 1e-12


def extract_features(window: DataWindow, constraints: IntegrityConstraints) -> np.ndarray:
    """Eleven summary statistics of one window, in ``FEATURE_NAMES`` order.

    A window with no present values maps to the all-defect sentinel: every
    distribution statistic is 0 and missing_fraction is 1.
    """
    if window.n == 0:
        raise ValueError("cannot extract features from a zero-length window")
    x = window.present_values
    n = window.n
    missing_fraction = window.missing_count / n
    if x.size == 0:
        out = np.zeros(N_FEATURES, dtype=np.float64)
        out[7] = 1.0
        return out
    xs = np.sort(x)
    mean = float(x.mean())
    d = x - mean
    sq = float(d @ d)
    std = math.sqrt(sq / x.size)
    autocorr = float(d[:-1] @ d[1:]) / sq if sq > 0.0 and x.size > 1 else 0.0
    # Out-of-range counts fall out of the sorted copy for free.
    below = int(xs.searchsorted(constraints.min_value, side="left"))
    above = xs.size - int(xs.searchsorted(constraints.max_value, side="right"))
    return np.array(
        [
            mean,
            std,
            float(xs[0]),
            float(xs[-1]),
            _sorted_quantile(xs, 0.5),
            _sorted_quantile(xs, 0.25),
            _sorted_quantile(xs, 0.75),
            missing_fraction,
            (below + above) / n,
            autocorr,
            float(x.size),
        ],
        dtype=np.float64,
    )


def _sorted_quantile(xs: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile of an already sorted array."""
    if xs.size == 1:
        return float(xs[0])
    pos = q * (xs.size - 1)
    lo = math.floor(pos)
    frac = pos - lo
    if frac == 0.0:
        return float(xs[lo])
    return float(xs[lo] + frac * (xs[lo + 1] - xs[lo]))


# ---------------------------------------------------------------------------
# Gradient-boosted regression trees
# ---------------------------------------------------------------------------


def _best_split(X: np.ndarray, residuals: np.ndarray, min_leaf: int):
    """Exact greedy split maximizing squared-error reduction.

    Candidate thresholds are midpoints between consecutive distinct sorted
    feature values. Ties are broken toward the lowest feature index, then
    the lowest threshold: features are scanned in index order, candidates in
    ascending threshold order, and a candidate replaces the incumbent only
    on strictly greater gain. Returns ``None`` when no split improves on the
    parent node.
    """
    n = residuals.size
    total = float(residuals.sum())
    parent_score = total * total / n
    best_gain = _MIN_GAIN
    best: tuple[int, float] | None = None
    lo = min_leaf - 1
    hi = n - min_leaf
    if lo >= hi:
        return None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        prefix = np.cumsum(residuals[order])
        idx = np.arange(lo, hi)
        distinct = xs[lo:hi] < xs[lo + 1 : hi + 1]
        idx = idx[distinct]
        if idx.size == 0:
            continue
        n_left = idx + 1.0
        s_left = prefix[idx]
        s_right = total - s_left
        score = s_left * s_left / n_left + s_right * s_right / (n - n_left)
        k = int(np.argmax(score))
        gain = float(score[k]) - parent_score
        if gain > best_gain:
            best_gain = gain
            i = int(idx[k])
            best = (j, float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _build_tree(
    X: np.ndarray,
    residuals: np.ndarray,
    max_depth: int,
    min_leaf: int,
    train_pred: np.ndarray,
) -> list[dict]:
    """Fit one regression tree on the residuals.

    Nodes are stored as a flat list of dicts with child indices; leaves use
    ``feature_index`` -1. ``train_pred`` is filled in place with each row's
    leaf value, which saves a full predict pass per boosting round.
    """
    nodes: list[dict] = []

    def grow(row_idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)  # reserve slot so children come after their parent
        r = residuals[row_idx]
        split = None
        if depth < max_depth and row_idx.size >= 2 * min_leaf:
            split = _best_split(X[row_idx], r, min_leaf)
        if split is None:
            value = float(r.mean())
            train_pred[row_idx] = value
            nodes[node_id] = {
                "feature_index": -1,
                "threshold": 0.0,
                "left": -1,
                "right": -1,
                "leaf_value": value,
            }
            return node_id
        feature, threshold = split
        mask = X[row_idx, feature] <= threshold
        left_id = grow(row_idx[mask], depth + 1)
        right_id = grow(row_idx[~mask], depth + 1)
        nodes[node_id] = {
            "feature_index": feature,
            "threshold": threshold,
            "left": left_id,
            "right": right_id,
            "leaf_value": None,
        }
        return node_id

    grow(np.arange(X.shape[0]), 0)
    return nodes


class GradientBoostedScoreRegressor(RegressorMixin, BaseEstimator):
    """Deterministic gradient boosting for the unified quality score.

    Squared loss on residuals; every tree stores raw leaf means and the
    learning rate is applied at prediction time:
    ``prediction = base_score + learning_rate * sum(tree outputs)``.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int = 4,
        learning_rate: float = 0.1,
        min_samples_leaf: int = 3,
        seed: int = 0,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.base_score_: float | None = None
        self.trees_: list[list[dict]] | None = None
        self.fingerprint_: str | None = None
        self._packed = None

    def fit(self, X, y) -> "GradientBoostedScoreRegressor":
        X = as_float_2d(X, "features", min_rows=1)
        y = as_float_1d(y, "targets")
        if y.size != X.shape[0]:
            raise FitError(f"feature rows ({X.shape[0]}) and targets ({y.size}) differ")
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise FitError("n_trees, max_depth, and min_samples_leaf must all be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise FitError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        self.fingerprint_ = _data_fingerprint(X, y)
        self.base_score_ = float(y.mean())
        residuals = y - self.base_score_
        trees: list[list[dict]] = []
        train_pred = np.empty_like(residuals)
        for _ in range(self.n_trees):
            trees.append(
                _build_tree(X, residuals, self.max_depth, self.min_samples_leaf, train_pred)
            )
            residuals = residuals - self.learning_rate * train_pred
        self.trees_ = trees
        self._packed = _pack_trees(trees, self.max_depth)
        return self

    def predict_one(self, x) -> float:
        """Predict one feature vector via the packed complete-tree layout.

        All node comparisons happen in one vectorized pass; the level loop
        then only gathers precomputed branch bits, so the walk costs a
        handful of numpy calls regardless of ensemble size.
        """
        check_fitted(self, ("trees_",))
        feat, thr, leaf_flat, level_bases, leaf_base, depth = self._packed
        x = np.asarray(x, dtype=np.float64)
        go_right = (x.take(feat) > thr).view(np.int8)
        pos = go_right.take(level_bases[0])
        for d in range(1, depth):
            pos = pos + pos + go_right.take(level_bases[d] + pos)
        return self.base_score_ + self.learning_rate * float(
            leaf_flat.take(leaf_base + pos).sum()
        )

    def predict(self, X) -> np.ndarray:
        check_fitted(self, ("trees_",))
        X = as_float_2d(X, "features", min_rows=1)
        return np.array([self.predict_one(row) for row in X], dtype=np.float64)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        check_fitted(self, ("trees_",))
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "hyperparameters": {
                "n_trees": self.n_trees,
                "max_depth": self.max_depth,
                "learning_rate": self.learning_rate,
                "min_samples_leaf": self.min_samples_leaf,
                "seed": self.seed,
            },
            "base_score": self.base_score_,
            "fingerprint": self.fingerprint_,
            "trees": [{"nodes": nodes} for nodes in self.trees_],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GradientBoostedScoreRegressor":
        version = payload.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        hp = payload["hyperparameters"]
        model = cls(
            n_trees=int(hp["n_trees"]),
            max_depth=int(hp["max_depth"]),
            learning_rate=float(hp["learning_rate"]),
            min_samples_leaf=int(hp["min_samples_leaf"]),
            seed=int(hp["seed"]),
        )
        model.base_score_ = float(payload["base_score"])
        model.fingerprint_ = payload["fingerprint"]
        model.trees_ = [
            [dict(node) for node in tree["nodes"]] for tree in payload["trees"]
        ]
        model._packed = _pack_trees(model.trees_, model.max_depth)
        return model


def _pack_trees(trees: list[list[dict]], max_depth: int):
    """Flatten trees into complete-binary-tree arrays for vectorized walks.

    Shallow leaves are expanded: their value fills every descendant leaf
    slot and the intervening internal slots keep a +inf threshold so the
    walk always branches left through them. Node arrays are flattened
    tree-major with per-level base offsets so a walk can gather straight
    from 1-D arrays.
    """
    m = len(trees)
    n_internal = (1 << max_depth) - 1
    n_leaves = 1 << max_depth
    feat = np.zeros((m, n_internal), dtype=np.intp)
    thr = np.full((m, n_internal), np.inf, dtype=np.float64)
    leaf = np.zeros((m, n_leaves), dtype=np.float64)

    for t, nodes in enumerate(trees):
        stack = [(0, 0, 0)]  # node id, depth, position within level
        while stack:
            node_id, depth, pos = stack.pop()
            node = nodes[node_id]
            if node["feature_index"] < 0:
                width = 1 << (max_depth - depth)
                leaf[t, pos * width : (pos + 1) * width] = node["leaf_value"]
                continue
            feat[t, (1 << depth) - 1 + pos] = node["feature_index"]
            thr[t, (1 << depth) - 1 + pos] = node["threshold"]
            stack.append((node["left"], depth + 1, 2 * pos))
            stack.append((node["right"], depth + 1, 2 * pos + 1))
    tree_offsets = np.arange(m, dtype=np.intp) * n_internal
    level_bases = [tree_offsets + ((1 << d) - 1) for d in range(max_depth)]
    leaf_base = np.arange(m, dtype=np.intp) * n_leaves
    return feat.ravel(), thr.ravel(), leaf.ravel(), level_bases, leaf_base, max_depth


def _data_fingerprint(X: np.ndarray, y: np.ndarray) -> str:
    """SHA-256 over the raw training bytes, recorded with every fit."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(X).tobytes())
    digest.update(np.ascontiguousarray(y).tobytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Metrics and oracle checks
# ---------------------------------------------------------------------------


def mae(y_true, y_pred) -> float:
    """Mean absolute error."""
    yt, yp = _paired(y_true, y_pred)
    return float(np.mean(np.abs(yt - yp)))


def r2(y_true, y_pred) -> float:
    """Coefficient of determination; undefined for zero-variance targets."""
    yt, yp = _paired(y_true, y_pred)
    ss_tot = float(np.sum((yt - yt.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricError("R^2 is undefined when the targets have zero variance")
    ss_res = float(np.sum((yt - yp) ** 2))
    return 1.0 - ss_res / ss_tot


def _paired(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = as_float_1d(y_true, "y_true")
    yp = as_float_1d(y_pred, "y_pred")
    if yt.size != yp.size:
        raise ValueError(f"length mismatch: {yt.size} targets vs {yp.size} predictions")
    return yt, yp


@dataclass(frozen=True)
class OracleReport:
    """Outcome of comparing predictions against authoritative scores."""

    mae: float
    r2: float | None
    n: int
    passed: bool
    metric: str
    threshold: float
    reason: str | None = None


def oracle_check(y_true, y_pred, metric: str, threshold: float) -> OracleReport:
    """Judge predictions on one configured metric.

    ``metric`` is ``"mae"`` (pass when mae <= threshold) or ``"r2"`` (pass
    when r2 >= threshold). Both values are reported when computable; an
    incomputable chosen metric fails with the reason recorded instead of
    raising.
    """
    if metric not in ("mae", "r2"):
        raise ValueError(f"metric must be 'mae' or 'r2', got {metric!r}")
    yt, yp = _paired(y_true, y_pred)
    mae_value = mae(yt, yp)
    r2_value: float | None
    r2_reason: str | None = None
    try:
        r2_value = r2(yt, yp)
    except MetricError as exc:
        r2_value = None
        r2_reason = str(exc)
    if metric == "mae":
        passed = mae_value <= threshold
        reason = None if passed else f"mae {mae_value:.6g} exceeds {threshold:.6g}"
    elif r2_value is None:
        passed = False
        reason = r2_reason
    else:
        passed = r2_value >= threshold
        reason = None if passed else f"r2 {r2_value:.6g} below {threshold:.6g}"
    return OracleReport(
        mae=mae_value,
        r2=r2_value,
        n=int(yt.size),
        passed=passed,
        metric=metric,
        threshold=threshold,
        reason=reason,
    )


def dump_model_json(model: GradientBoostedScoreRegressor) -> str:
    """Canonical JSON for a fitted model; byte-stable for identical fits."""
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))


def load_model_json(text: str) -> GradientBoostedScoreRegressor:
    return GradientBoostedScoreRegressor.from_dict(json.loads(text))
