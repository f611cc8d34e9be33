from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from driftq.drift import (
    DEFAULT_BINS,
    DriftVerdict,
    JsdDriftDetector,
    Pdf,
    empirical_p_value,
    estimate_pdf,
    jsd,
    make_grid,
    shannon_entropy,
)
from driftq.errors import GridMismatchError
from driftq.windowing import DataWindow, Reading

from oracles import entropy_loop, jsd_loop, p_value_loop, pdf_loop

# Frozen by hand from the definitions: H(3/4, 1/4) and JSD([1,0], [1/2,1/2]).
ENTROPY_3Q = 0.8112781244591328
JSD_DEGENERATE = 0.31127812445913283


def window_of(values: list[float | None], wid: int = 0) -> DataWindow:
    return DataWindow(wid, tuple(Reading(i, v) for i, v in enumerate(values)))


pdf_strategy = st.lists(st.floats(0.001, 10.0), min_size=2, max_size=24).map(
    lambda ws: np.asarray(ws) / np.sum(ws)
)


class TestGrid:
    def test_padding_is_five_percent_per_side(self) -> None:
        edges = make_grid([0.0, 10.0], bins=4, pad_fraction=0.05)
        assert edges.size == 5
        assert edges[0] == pytest.approx(-0.5)
        assert edges[-1] == pytest.approx(10.5)

    def test_constant_input_is_widened(self) -> None:
        edges = make_grid([7.0, 7.0, 7.0], bins=DEFAULT_BINS)
        assert edges.size == DEFAULT_BINS + 1
        assert edges[0] < 7.0 < edges[-1]

    def test_edges_are_equal_width(self) -> None:
        edges = make_grid([0.0, 1.0], bins=8)
        widths = np.diff(edges)
        np.testing.assert_allclose(widths, widths[0])


class TestEstimatePdf:
    def test_matches_loop_oracle_frozen(self) -> None:
        edges = [0.0, 1.0, 2.0]
        sample = [0.5, 0.5, 0.7, 1.5]
        pdf = estimate_pdf(sample, edges)
        np.testing.assert_array_equal(pdf.probs, pdf_loop(sample, edges))
        np.testing.assert_array_equal(pdf.probs, [0.75, 0.25])

    def test_smoothing_adds_pseudocounts(self) -> None:
        # counts [3, 1] with one pseudo-count per bin -> [4/6, 2/6]
        pdf = estimate_pdf([0.1, 0.2, 0.3, 1.5], [0.0, 1.0, 2.0], smoothing=1.0)
        np.testing.assert_allclose(pdf.probs, [4 / 6, 2 / 6])

    def test_out_of_grid_values_clamp_to_boundary_bins(self) -> None:
        pdf = estimate_pdf([-100.0, 100.0], [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(pdf.probs, [0.5, 0.5])

    def test_value_on_last_edge_lands_in_last_bin(self) -> None:
        pdf = estimate_pdf([2.0], [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(pdf.probs, [0.0, 1.0])

    def test_rejects_bad_inputs(self) -> None:
        with pytest.raises(ValueError):
            estimate_pdf([1.0], [0.0])
        with pytest.raises(ValueError):
            estimate_pdf([1.0], [0.0, 1.0], smoothing=-0.1)
        with pytest.raises(ValueError):
            estimate_pdf([], [0.0, 1.0])

    @given(
        sample=st.lists(st.floats(-50, 50), min_size=1, max_size=120),
        n_bins=st.integers(1, 16),
        lo=st.floats(-20, 0),
        width=st.floats(0.1, 10),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_numpy_histogram_everywhere(
        self, sample: list[float], n_bins: int, lo: float, width: float
    ) -> None:
        edges = lo + width * np.arange(n_bins + 1)
        pdf = estimate_pdf(sample, edges)
        clamped = np.clip(sample, edges[0], edges[-1])
        counts, _ = np.histogram(clamped, bins=edges)
        np.testing.assert_array_equal(pdf.probs, counts / counts.sum())

    @given(sample=st.lists(st.floats(-5, 5), min_size=1, max_size=60))
    @settings(max_examples=60, deadline=None)
    def test_probs_always_normalized(self, sample: list[float]) -> None:
        pdf = estimate_pdf(sample, np.linspace(-6, 6, 9))
        assert pdf.probs.sum() == pytest.approx(1.0)
        assert np.all(pdf.probs >= 0)


class TestEntropyAndJsd:
    def test_entropy_frozen_value(self) -> None:
        assert shannon_entropy([0.75, 0.25]) == pytest.approx(ENTROPY_3Q, abs=1e-15)

    def test_entropy_uniform_is_log2_bins(self) -> None:
        assert shannon_entropy([0.25] * 4) == pytest.approx(2.0)

    def test_entropy_zero_terms_dropped(self) -> None:
        assert shannon_entropy([1.0, 0.0, 0.0]) == 0.0

    def test_entropy_rejects_negative_and_empty(self) -> None:
        with pytest.raises(ValueError):
            shannon_entropy([-0.1, 1.1])
        with pytest.raises(ValueError):
            shannon_entropy([])

    def test_jsd_frozen_value(self) -> None:
        edges = [0.0, 1.0, 2.0]
        p = Pdf(edges, [1.0, 0.0])
        q = Pdf(edges, [0.5, 0.5])
        assert jsd(p, q) == pytest.approx(JSD_DEGENERATE, abs=1e-15)

    def test_jsd_grid_mismatch_raises(self) -> None:
        p = Pdf([0.0, 1.0, 2.0], [0.5, 0.5])
        q = Pdf([0.0, 1.5, 3.0], [0.5, 0.5])
        with pytest.raises(GridMismatchError):
            jsd(p, q)

    def test_pdf_shape_validated(self) -> None:
        with pytest.raises(ValueError):
            Pdf([0.0, 1.0], [0.5, 0.5])

    @given(p=pdf_strategy, q=pdf_strategy)
    @settings(max_examples=150, deadline=None)
    def test_jsd_matches_loop_and_properties(self, p: np.ndarray, q: np.ndarray) -> None:
        size = min(p.size, q.size)
        p, q = p[:size] / p[:size].sum(), q[:size] / q[:size].sum()
        edges = np.arange(size + 1, dtype=np.float64)
        a, b = Pdf(edges, p), Pdf(edges, q)
        d = jsd(a, b)
        assert d == pytest.approx(jsd_loop(p, q), abs=1e-12)
        assert d == jsd(b, a)  # exactly symmetric
        assert -1e-12 <= d <= 1.0
        assert jsd(a, a) == 0.0

    @given(p=pdf_strategy)
    @settings(max_examples=60, deadline=None)
    def test_entropy_matches_loop(self, p: np.ndarray) -> None:
        assert shannon_entropy(p) == pytest.approx(entropy_loop(p), abs=1e-12)


class TestEmpiricalPValue:
    def test_frozen_values(self) -> None:
        history = [0.1, 0.2, 0.3, 0.4]
        assert empirical_p_value(history, 0.5) == pytest.approx(0.2)
        assert empirical_p_value(history, 0.05) == pytest.approx(1.0)
        assert empirical_p_value(history, 0.25) == pytest.approx(0.6)

    def test_empty_history_gives_one(self) -> None:
        assert empirical_p_value([], 0.7) == 1.0

    @given(
        history=st.lists(st.floats(0, 1), min_size=0, max_size=80),
        d=st.floats(0, 1),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_loop_oracle(self, history: list[float], d: float) -> None:
        assert empirical_p_value(history, d) == p_value_loop(history, d)


class TestDetector:
    def fitted(self, tau: float = 0.05, min_history: int = 5) -> JsdDriftDetector:
        rng = np.random.default_rng(0)
        ref = rng.normal(10.0, 1.0, 400)
        det = JsdDriftDetector(tau=tau, min_history=min_history)
        return det.fit(ref, make_grid(ref, bins=16))

    def stream_window(self, seed: int, loc: float = 10.0) -> DataWindow:
        rng = np.random.default_rng(seed)
        return window_of(list(rng.normal(loc, 1.0, 50)), wid=seed)

    def test_requires_fit(self) -> None:
        with pytest.raises(NotFittedError):
            JsdDriftDetector().observe(self.stream_window(1))

    def test_fit_validates_parameters(self) -> None:
        with pytest.raises(ValueError):
            JsdDriftDetector(tau=0.0).fit([1.0, 2.0], [0.0, 1.0, 3.0])
        with pytest.raises(ValueError):
            JsdDriftDetector(min_history=0).fit([1.0, 2.0], [0.0, 1.0, 3.0])

    def test_warmup_gates_the_p_value(self) -> None:
        det = self.fitted(min_history=5)
        for i in range(5):
            verdict = det.observe(self.stream_window(i))
            assert verdict.p_value is None
            assert not verdict.drifted
            assert not verdict.warmed_up
        verdict = det.observe(self.stream_window(99))
        assert verdict.warmed_up
        assert verdict.p_value is not None

    def test_window_never_compared_against_itself(self) -> None:
        det = self.fitted(tau=0.15, min_history=3)
        for i in range(10):
            det.observe(self.stream_window(i))
        n_before = det.divergence_history.size
        verdict = det.observe(self.stream_window(1000, loc=25.0))
        # the outlandish divergence beats the whole pre-existing null
        assert verdict.p_value == pytest.approx(1.0 / (1.0 + n_before))
        assert verdict.drifted
        assert det.divergence_history.size == n_before + 1

    def test_all_missing_window_is_skipped(self) -> None:
        det = self.fitted()
        before = det.divergence_history.size
        verdict = det.observe(window_of([None, None, None]))
        assert verdict == DriftVerdict(divergence=None, p_value=None, drifted=False, warmed_up=False)
        assert det.divergence_history.size == before

    def test_fixed_threshold_mode_bypasses_p_values(self) -> None:
        det = JsdDriftDetector(fixed_threshold=0.2, min_history=1)
        rng = np.random.default_rng(3)
        ref = rng.normal(0.0, 1.0, 300)
        det.fit(ref, make_grid(ref, bins=16))
        calm = det.observe(window_of(list(rng.normal(0.0, 1.0, 80))))
        wild = det.observe(window_of(list(rng.normal(40.0, 1.0, 80))))
        assert not calm.drifted and calm.p_value is None
        assert wild.drifted and wild.divergence > 0.2

    def test_record_seeds_warmup(self) -> None:
        det = self.fitted(min_history=4)
        for d in (0.01, 0.02, 0.03, 0.04):
            det.record(d)
        assert det.warmed_up
        np.testing.assert_array_equal(det.divergence_history, [0.01, 0.02, 0.03, 0.04])

    def test_history_buffer_grows_past_initial_capacity(self) -> None:
        det = self.fitted(min_history=1)
        values = np.linspace(0.0, 1.0, 700)
        for d in values:
            det.record(float(d))
        np.testing.assert_array_equal(det.divergence_history, values)
        assert empirical_p_value(det.divergence_history, 0.5) == p_value_loop(values, 0.5)

    def test_rebaseline_keeps_history_and_grid(self) -> None:
        det = self.fitted(min_history=2)
        for i in range(6):
            det.observe(self.stream_window(i))
        history = det.divergence_history
        edges = det.reference_pdf_.bin_edges
        rng = np.random.default_rng(42)
        det.rebaseline(rng.normal(11.0, 1.0, 300))
        np.testing.assert_array_equal(det.divergence_history, history)
        np.testing.assert_array_equal(det.reference_pdf_.bin_edges, edges)

    def test_fit_clears_history(self) -> None:
        det = self.fitted()
        det.record(0.5)
        rng = np.random.default_rng(1)
        ref = rng.normal(0, 1, 100)
        det.fit(ref, make_grid(ref))
        assert det.divergence_history.size == 0
