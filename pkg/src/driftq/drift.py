"""Distribution-shift detection over windowed streams.

Each window is reduced to a histogram PDF on a fixed bin grid and compared
to a reference PDF with the base-2 Jensen-Shannon divergence. The detector
keeps every observed divergence; a window is flagged as drifted when the
add-one empirical p-value of its divergence against that history falls
below the sensitivity threshold tau. Re-baselining swaps in a new reference
PDF but keeps the divergence history, so the empirical null keeps growing
across adaptations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import GridMismatchError
from .validation import as_float_1d, check_fitted
from .windowing import DataWindow

DEFAULT_BINS = 32
DEFAULT_PAD_FRACTION = 0.05


@dataclass(frozen=True)
class Pdf:
    """A normalized histogram: bin edges of length B+1 and B probabilities."""

    bin_edges: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", np.asarray(self.bin_edges, dtype=np.float64))
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        if self.bin_edges.size != self.probs.size + 1:
            raise ValueError(
                f"need len(bin_edges) == len(probs) + 1, got {self.bin_edges.size} and {self.probs.size}"
            )

    def same_grid(self, other: "Pdf") -> bool:
        if self.bin_edges is other.bin_edges:
            return True
        return self.bin_edges.size == other.bin_edges.size and bool(
            np.array_equal(self.bin_edges, other.bin_edges)
        )


def make_grid(values, bins: int = DEFAULT_BINS, pad_fraction: float = DEFAULT_PAD_FRACTION) -> np.ndarray:
    """Equal-width bin edges spanning [min, max] padded by ``pad_fraction`` per side.

    A degenerate (constant) value range is widened by 0.5 each side before
    padding so the grid always has positive width.
    """
    arr = as_float_1d(values, "values")
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    lo -= pad_fraction * span
    hi += pad_fraction * span
    return np.linspace(lo, hi, bins + 1)


def estimate_pdf(sample, bin_edges, smoothing: float = 0.0) -> Pdf:
    """Histogram PDF of ``sample`` on a fixed grid.

    Values outside the grid range are clamped into the boundary bins, so the
    estimate is total: probabilities always sum to 1 for a non-empty sample.
    ``smoothing`` adds a per-bin pseudo-count before normalization.
    """
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("bin_edges must be a 1-D array with at least two edges")
    if smoothing < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    arr = as_float_1d(sample, "sample")
    n_bins = edges.size - 1
    clamped = np.clip(arr, edges[0], edges[-1])
    # Bins are half-open [e_i, e_{i+1}) with the last bin closed, matching
    # np.histogram on the same edges.
    idx = np.minimum(edges.searchsorted(clamped, side="right") - 1, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins).astype(np.float64)
    if smoothing:
        counts += smoothing
    total = counts.sum()
    if total <= 0:
        raise ValueError("cannot normalize an all-zero histogram")
    return Pdf(bin_edges=edges, probs=counts / total)


def shannon_entropy(probs) -> float:
    """Base-2 Shannon entropy with the 0*log2(0) = 0 convention."""
    p = np.asarray(probs, dtype=np.float64)
    if p.size == 0:
        raise ValueError("probs must not be empty")
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    return _entropy(p)


def _entropy(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def jsd(p: Pdf, q: Pdf) -> float:
    """Base-2 Jensen-Shannon divergence between two PDFs on one grid.

    Symmetric, bounded in [0, 1], and exactly 0 when the inputs are equal.
    """
    if not p.same_grid(q):
        raise GridMismatchError("cannot compare PDFs estimated on different bin grids")
    m = (p.probs + q.probs) / 2.0
    return _entropy(m) - (_entropy(p.probs) + _entropy(q.probs)) / 2.0


def empirical_p_value(history, divergence: float) -> float:
    """Add-one rank of ``divergence`` within ``history``: (1 + #{h >= d}) / (1 + len)."""
    h = np.asarray(history, dtype=np.float64)
    at_least = int(np.count_nonzero(h >= divergence))
    return (1.0 + at_least) / (1.0 + h.size)


@dataclass(frozen=True)
class DriftVerdict:
    """Outcome of observing one window.

    ``divergence`` and ``p_value`` are ``None`` when the window had no
    present values (a data fault, not evidence of drift). ``p_value`` is
    also ``None`` before warm-up completes.
    """

    divergence: float | None
    p_value: float | None
    drifted: bool
    warmed_up: bool


class JsdDriftDetector(BaseEstimator):
    """Streaming drift detector with a self-calibrating empirical threshold.

    Parameters
    ----------
    tau : sensitivity; drift fires when the empirical p-value drops below it.
    min_history : divergences required before verdicts can fire (warm-up).
    smoothing : pseudo-count used when estimating the reference and window PDFs.
    fixed_threshold : optional legacy mode; when set, drift fires whenever the
        divergence exceeds this constant and the p-value machinery is bypassed.
    """

    def __init__(
        self,
        tau: float = 0.03,
        min_history: int = 30,
        smoothing: float = 0.0,
        fixed_threshold: float | None = None,
    ):
        self.tau = tau
        self.min_history = min_history
        self.smoothing = smoothing
        self.fixed_threshold = fixed_threshold
        self.reference_pdf_: Pdf | None = None
        self._history = np.empty(256, dtype=np.float64)
        self._history_len = 0

    # -- lifecycle -----------------------------------------------------

    def fit(self, reference_values, bin_edges) -> "JsdDriftDetector":
        """Estimate the reference PDF on ``bin_edges`` and clear the history."""
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if self.min_history < 1:
            raise ValueError(f"min_history must be >= 1, got {self.min_history}")
        self.reference_pdf_ = estimate_pdf(reference_values, bin_edges, self.smoothing)
        self._history_len = 0
        return self

    def rebaseline(self, new_reference_values) -> "JsdDriftDetector":
        """Re-estimate the reference PDF on the existing grid; history is kept."""
        check_fitted(self, ("reference_pdf_",))
        self.reference_pdf_ = estimate_pdf(
            new_reference_values, self.reference_pdf_.bin_edges, self.smoothing
        )
        return self

    # -- observation ---------------------------------------------------

    def observe(self, window: DataWindow) -> DriftVerdict:
        """Score one window against the reference and update the history.

        The divergence is appended after the p-value test, so a window is
        never compared against itself. All-missing windows produce a verdict
        with no divergence and are not appended.
        """
        check_fitted(self, ("reference_pdf_",))
        values = window.present_values
        warmed = self._history_len >= self.min_history
        if values.size == 0:
            return DriftVerdict(divergence=None, p_value=None, drifted=False, warmed_up=warmed)
        window_pdf = estimate_pdf(values, self.reference_pdf_.bin_edges, self.smoothing)
        d = jsd(self.reference_pdf_, window_pdf)
        if self.fixed_threshold is not None:
            verdict = DriftVerdict(
                divergence=d,
                p_value=None,
                drifted=d > self.fixed_threshold,
                warmed_up=warmed,
            )
        elif not warmed:
            verdict = DriftVerdict(divergence=d, p_value=None, drifted=False, warmed_up=False)
        else:
            p = empirical_p_value(self._history[: self._history_len], d)
            verdict = DriftVerdict(divergence=d, p_value=p, drifted=p < self.tau, warmed_up=True)
        self._append(d)
        return verdict

    def record(self, divergence: float) -> None:
        """Append a divergence without running the drift test (warm-up seeding)."""
        self._append(float(divergence))

    def _append(self, divergence: float) -> None:
        # Amortized-O(1) append into a preallocated buffer; the history is
        # consulted on every observation, so a plain list would cost a full
        # array conversion per window.
        if self._history_len == self._history.size:
            grown = np.empty(self._history.size * 2, dtype=np.float64)
            grown[: self._history_len] = self._history[: self._history_len]
            self._history = grown
        self._history[self._history_len] = divergence
        self._history_len += 1

    @property
    def divergence_history(self) -> np.ndarray:
        return self._history[: self._history_len].copy()

    @property
    def warmed_up(self) -> bool:
        return self._history_len >= self.min_history
