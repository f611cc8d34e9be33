from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.exceptions import NotFittedError

from driftq.aggregation import (
    N_DIMENSIONS,
    PrincipalScoreAggregator,
    QualityStandardizer,
    StandardScorer,
)
from driftq.dimensions import (
    SKEWNESS_INDEX,
    IntegrityConstraints,
    QualityVector,
    ReferenceSample,
    RobustZScoreDetector,
)
from driftq.drift import estimate_pdf, make_grid
from driftq.errors import FitError
from driftq.windowing import DataWindow, Reading

from oracles import covariance_loop, standard_score_straightline, top_eigenvector_power


def random_matrix(seed: int, rows: int = 40) -> np.ndarray:
    rng = np.random.default_rng(seed)
    base = rng.normal(0.0, 1.0, (rows, N_DIMENSIONS))
    # correlate the columns so the top eigenpair is well separated
    base[:, 1] += 0.8 * base[:, 0]
    base[:, 4] -= 0.6 * base[:, 0]
    return base


class TestStandardizer:
    def test_population_statistics(self) -> None:
        X = np.array([[1.0, 0.0, 0.0, 0.0, 0.0], [3.0, 0.0, 0.0, 0.0, 0.0]])
        st_ = QualityStandardizer().fit(X)
        assert st_.means_[0] == 2.0
        # population std of {1, 3} is 1, not sqrt(2)
        assert st_.stds_[0] == 1.0

    def test_frozen_three_row_column(self) -> None:
        X = np.zeros((3, 5))
        X[:, 2] = [1.0, 2.0, 3.0]
        st_ = QualityStandardizer().fit(X)
        assert st_.stds_[2] == pytest.approx(np.sqrt(2.0 / 3.0))

    def test_zero_spread_column_maps_to_zero(self) -> None:
        X = np.ones((4, 5))
        X[:, 0] = [0.0, 1.0, 2.0, 3.0]
        st_ = QualityStandardizer().fit(X)
        Z = st_.transform(X)
        np.testing.assert_array_equal(Z[:, 1:], np.zeros((4, 4)))
        assert Z[:, 0].std() == pytest.approx(1.0)

    def test_transform_one_matches_matrix_path(self) -> None:
        X = random_matrix(5)
        st_ = QualityStandardizer().fit(X)
        np.testing.assert_array_equal(st_.transform_one(X[7]), st_.transform(X)[7])

    def test_needs_two_rows(self) -> None:
        with pytest.raises(ValueError):
            QualityStandardizer().fit(np.ones((1, 5)))

    def test_unfitted_raises(self) -> None:
        with pytest.raises(NotFittedError):
            QualityStandardizer().transform(np.ones((2, 5)))

    def test_dict_round_trip(self) -> None:
        X = random_matrix(9)
        st_ = QualityStandardizer().fit(X)
        clone = QualityStandardizer.from_dict(st_.to_dict())
        np.testing.assert_array_equal(clone.transform(X), st_.transform(X))

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_transformed_columns_have_zero_mean_unit_std(self, seed: int) -> None:
        X = random_matrix(seed, rows=30)
        Z = QualityStandardizer().fit(X).transform(X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)


class TestAggregator:
    def test_loadings_unit_norm_and_skewness_sign(self) -> None:
        Z = QualityStandardizer().fit(random_matrix(2)).transform(random_matrix(2))
        agg = PrincipalScoreAggregator().fit(Z)
        assert np.linalg.norm(agg.loadings_) == pytest.approx(1.0)
        assert agg.loadings_[SKEWNESS_INDEX] <= 0.0
        assert 0.0 < agg.explained_variance_ratio_ <= 1.0
        assert agg.degenerate_ is False

    def test_projection_is_dot_product(self) -> None:
        Z = random_matrix(3)
        agg = PrincipalScoreAggregator().fit(Z)
        np.testing.assert_allclose(agg.transform(Z), Z @ agg.loadings_)
        assert agg.project_one(Z[0]) == pytest.approx(float(Z[0] @ agg.loadings_))

    def test_covariance_matches_loop_oracle(self) -> None:
        Z = random_matrix(21, rows=25)
        centered = Z - Z.mean(axis=0)
        np.testing.assert_allclose(
            centered.T @ centered / Z.shape[0], covariance_loop(Z), atol=1e-12
        )

    def test_degenerate_isotropic_cloud_is_flagged(self) -> None:
        # identical variance in two dimensions and none elsewhere makes the
        # top eigenpair a tie
        Z = np.zeros((8, 5))
        Z[:, 0] = [1, -1, 1, -1, 1, -1, 1, -1]
        Z[:, 1] = [1, 1, -1, -1, 1, 1, -1, -1]
        agg = PrincipalScoreAggregator().fit(Z)
        assert agg.degenerate_ is True

    def test_constant_matrix_is_degenerate(self) -> None:
        agg = PrincipalScoreAggregator().fit(np.ones((5, 5)))
        assert agg.degenerate_ is True
        assert agg.explained_variance_ratio_ == 0.0

    def test_unfitted_raises(self) -> None:
        with pytest.raises(NotFittedError):
            PrincipalScoreAggregator().transform(np.ones((2, 5)))

    def test_wrong_width_raises(self) -> None:
        with pytest.raises(ValueError):
            PrincipalScoreAggregator().fit(np.ones((4, 3)))

    def test_dict_round_trip(self) -> None:
        agg = PrincipalScoreAggregator().fit(random_matrix(4))
        clone = PrincipalScoreAggregator.from_dict(agg.to_dict())
        np.testing.assert_array_equal(clone.loadings_, agg.loadings_)
        assert clone.explained_variance_ratio_ == agg.explained_variance_ratio_
        assert clone.degenerate_ == agg.degenerate_

    @given(st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_loadings_match_power_iteration_oracle(self, seed: int) -> None:
        Z = random_matrix(seed, rows=35)
        agg = PrincipalScoreAggregator().fit(Z)
        reference = top_eigenvector_power(covariance_loop(Z))
        cosine = abs(float(agg.loadings_ @ reference))
        assert cosine > 1.0 - 1e-9


class TestStandardScorer:
    def make_scorer(self, seed: int = 17) -> tuple[StandardScorer, list[DataWindow]]:
        rng = np.random.default_rng(seed)
        ref = rng.normal(60.0, 6.0, 600)
        windows = []
        for wid in range(25):
            vals: list[float | None] = list(rng.normal(60.0, 6.0, 40))
            if wid % 5 == 0:
                vals[0] = None
            if wid % 7 == 0:
                vals[1] = 500.0
            windows.append(
                DataWindow(wid, tuple(Reading(i, v) for i, v in enumerate(vals)))
            )
        anomaly = RobustZScoreDetector().fit(ref)
        constraints = IntegrityConstraints(0.0, 130.0)
        edges = make_grid(ref, bins=32)
        ref_pdf = estimate_pdf(ref, edges, smoothing=1e-6)
        scorer_stub = StandardScorer(
            anomaly=anomaly,
            constraints=constraints,
            reference=ReferenceSample(ref),
            reference_pdf=ref_pdf,
            standardizer=QualityStandardizer(),
            aggregator=PrincipalScoreAggregator(),
        )
        X = np.stack([scorer_stub.quality(w).to_array() for w in windows])
        scorer_stub.standardizer.fit(X)
        scorer_stub.aggregator.fit(scorer_stub.standardizer.transform(X))
        return scorer_stub, windows

    def test_score_returns_vector_and_projection(self) -> None:
        scorer, windows = self.make_scorer()
        qv, s = scorer.score(windows[3])
        assert isinstance(qv, QualityVector)
        z = scorer.standardizer.transform_one(qv.to_array())
        assert s == pytest.approx(float(z @ scorer.aggregator.loadings_))

    def test_full_path_matches_straightline_oracle(self) -> None:
        scorer, windows = self.make_scorer()
        for w in windows[:8]:
            qv, s = scorer.score(w)
            expected_q, expected_s = standard_score_straightline(
                [r.value for r in w.readings],
                ref_median=scorer.anomaly.ref_median_,
                ref_mad=scorer.anomaly.ref_mad_,
                cutoff=scorer.anomaly.cutoff,
                min_value=scorer.constraints.min_value,
                max_value=scorer.constraints.max_value,
                reference_values=scorer.reference.values,
                ref_pdf_probs=scorer.reference_pdf.probs,
                bin_edges=scorer.reference_pdf.bin_edges,
                skew_smoothing=scorer.skew_smoothing,
                means=scorer.standardizer.means_,
                stds=scorer.standardizer.stds_,
                loadings=scorer.aggregator.loadings_,
            )
            np.testing.assert_allclose(qv.to_array(), expected_q, atol=1e-9)
            assert s == pytest.approx(expected_s, abs=1e-9)

    def test_all_missing_window_scores_the_sentinel(self) -> None:
        scorer, _ = self.make_scorer()
        w = DataWindow(99, tuple(Reading(i, None) for i in range(5)))
        qv, s = scorer.score(w)
        assert qv == QualityVector.sentinel()
        z = scorer.standardizer.transform_one(qv.to_array())
        assert s == pytest.approx(float(z @ scorer.aggregator.loadings_))
