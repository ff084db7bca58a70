import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from logitbayes.density import fit_histogram, fit_kde
from logitbayes.exceptions import FitError, NotFittedError, ParameterError
from logitbayes.inference import (
    BayesScorer,
    LogitSample,
    fit_scorer,
    map_score,
    ml_score,
    predict,
    smoothed_normalize,
    softmax,
)


@pytest.fixture
def ml_scorer(three_class):
    logits, labels = three_class
    return fit_scorer(logits, [2.55, 0.96, 1.40], lam=2.54e-7, mode="ml", labels=labels)


@pytest.fixture
def map_scorer(three_class):
    logits, labels = three_class
    return fit_scorer(logits, [2.55, 0.58, 1.90], [13, 38, 25], lam=2.58e-7, mode="map", labels=labels)


class TestFitScorer:
    def test_ml_has_only_likelihoods(self, ml_scorer):
        assert ml_scorer.nc == 3
        assert ml_scorer.priors is None
        assert ml_scorer.h == (2.55, 0.96, 1.40)
        assert ml_scorer.lam == 2.54e-7

    def test_map_has_priors(self, map_scorer):
        assert len(map_scorer.priors) == 3
        assert map_scorer.nbins == (13, 38, 25)

    def test_class_values_are_own_component_of_own_samples(self, three_class, ml_scorer):
        logits, labels = three_class
        for i, model in enumerate(ml_scorer.likelihoods):
            assert model.observations.tolist() == logits[labels == i, i].tolist()

    def test_prediction_conditioning(self, three_class):
        logits, labels = three_class
        scorer = fit_scorer(logits, [1, 1, 1], condition="prediction")
        pred = logits.argmax(axis=1)
        for i, model in enumerate(scorer.likelihoods):
            assert model.observations.tolist() == logits[pred == i, i].tolist()

    def test_accepts_samples(self, three_class):
        logits, labels = three_class
        samples = [LogitSample(k, z, y) for k, (z, y) in enumerate(zip(logits, labels))]
        a = fit_scorer(samples, [1.0, 1.0, 1.0])
        b = fit_scorer(logits, [1.0, 1.0, 1.0], labels=labels)
        assert_allclose(a.score(logits[:5]), b.score(logits[:5]), rtol=0, atol=0)

    def test_empty_class_named(self, three_class):
        logits, labels = three_class
        keep = labels != 1
        with pytest.raises(FitError, match="Cyclist"):
            fit_scorer(logits[keep], [1, 1, 1], labels=labels[keep], class_names=["Car", "Cyclist", "Ped"])

    def test_single_sample_class(self, three_class):
        logits, labels = three_class
        keep = (labels != 2) | (np.arange(labels.size) == np.flatnonzero(labels == 2)[0])
        with pytest.raises(FitError, match="class 2"):
            fit_scorer(logits[keep], [1, 1, 1], labels=labels[keep])

    def test_mismatched_parameter_lengths(self, three_class):
        logits, labels = three_class
        with pytest.raises(ParameterError):
            fit_scorer(logits, [1, 1], labels=labels)
        with pytest.raises(ParameterError):
            fit_scorer(logits, [1, 1, 1], [3, 3], mode="map", labels=labels)
        with pytest.raises(ParameterError):
            fit_scorer(logits, [1, 1, 1], mode="map", labels=labels)

    def test_unlabelled_rejected(self, three_class):
        logits, labels = three_class
        labels = labels.copy()
        labels[3] = -1
        with pytest.raises(FitError):
            fit_scorer(logits, [1, 1, 1], labels=labels)


class TestSoftmax:
    def test_uniform(self):
        assert_allclose(softmax([0, 0, 0]), [1 / 3] * 3, rtol=0, atol=1e-15)

    def test_no_overflow(self):
        s = softmax([1000.0, 0.0, 0.0])
        assert np.all(np.isfinite(s))
        assert s[0] == pytest.approx(1.0) and s[1] < 1e-300

    def test_values(self):
        assert_allclose(softmax([1, 2, 3]), [0.09003057, 0.24472847, 0.66524096], atol=1e-8)

    def test_rows(self):
        s = softmax(np.array([[1, 2, 3], [0, 0, 0]]))
        assert_allclose(s.sum(axis=1), 1, atol=1e-12)


class TestNormalization:
    def test_lambda_dominated(self):
        assert smoothed_normalize([0.0, 0.0, 0.0], 1e-7).tolist() == [1 / 3] * 3

    def test_degenerate_certainty(self):
        assert smoothed_normalize([1.0, 0.0, 0.0], 0.0).tolist() == [1.0, 0.0, 0.0]

    def test_hand_normalized_likelihoods(self):
        assert_allclose(smoothed_normalize([0.8, 0.2, 0.5], 1e-7), [0.53333, 0.13333, 0.33333], atol=1e-5)

    def test_hand_normalized_products(self):
        terms = np.array([0.8, 0.2, 0.5]) * np.array([0.5, 1.0, 0.2])
        assert_allclose(smoothed_normalize(terms, 1e-7), [0.57143, 0.28571, 0.14286], atol=1e-4)

    def test_all_zero_without_smoothing_is_uniform(self):
        assert smoothed_normalize([0.0, 0.0], 0.0).tolist() == [0.5, 0.5]

    @settings(max_examples=100, deadline=None)
    @given(terms=st.lists(st.floats(0, 1), min_size=2, max_size=6), lam=st.floats(1e-12, 1e3))
    def test_simplex(self, terms, lam):
        s = smoothed_normalize(terms, lam)
        assert abs(s.sum() - 1) <= 1e-12
        assert np.all((s >= 0) & (s <= 1))

    def test_large_lambda_tends_to_uniform(self):
        terms = np.array([0.9, 0.1, 0.4])
        s = smoothed_normalize(terms, 1e6 * terms.max())
        assert np.max(np.abs(s - 1 / 3)) <= 1e-6

    def test_continuous_in_lambda(self):
        terms = np.array([0.9, 0.1, 0.4])
        a = smoothed_normalize(terms, 0.5)
        b = smoothed_normalize(terms, 0.5 + 1e-9)
        assert np.max(np.abs(a - b)) < 1e-8


class TestScores:
    def test_far_below_support_is_uniform(self, ml_scorer, map_scorer):
        z = np.full(3, -1e4)
        assert ml_score(ml_scorer, z).tolist() == [1 / 3] * 3
        assert map_score(map_scorer, z).tolist() == [1 / 3] * 3

    def test_ml_uses_component_cdfs(self, ml_scorer, three_class):
        z = np.array([3.0, 1.0, -0.5])
        L = np.array([m.cdf(z[i]) for i, m in enumerate(ml_scorer.likelihoods)])
        expected = (L + ml_scorer.lam) / (L + ml_scorer.lam).sum()
        assert_allclose(ml_score(ml_scorer, z), expected, rtol=1e-15)

    def test_map_equals_ml_with_unit_priors(self, three_class):
        logits, labels = three_class
        ml = fit_scorer(logits, [0.8, 1.1, 0.6], lam=1e-7, labels=labels)
        mp = fit_scorer(logits, [0.8, 1.1, 0.6], [5, 9, 11], lam=1e-7, mode="map", labels=labels)
        top = np.array([m.edges[-1] for m in mp.priors])
        z = top + np.array([[0.1, 0.2, 0.3], [1.0, 0.0, 2.0]])
        assert np.all(mp.prior_terms(z) == 1.0)
        assert_allclose(map_score(mp, z), ml_score(ml, z), rtol=0, atol=1e-12)

    def test_map_on_ml_scorer(self, ml_scorer):
        with pytest.raises(NotFittedError):
            map_score(ml_scorer, [0.0, 0.0, 0.0])

    def test_wrong_length(self, ml_scorer):
        with pytest.raises(ParameterError):
            ml_score(ml_scorer, [0.0, 0.0])

    def test_batch_equals_rows(self, map_scorer, three_class):
        logits, _ = three_class
        batch = map_score(map_scorer, logits[:10])
        rows = np.array([map_score(map_scorer, z) for z in logits[:10]])
        assert np.array_equal(batch, rows)

    def test_deterministic(self, map_scorer, rng):
        z = rng.normal(0, 3, size=(50, 3))
        assert np.array_equal(map_score(map_scorer, z), map_score(map_scorer, z))

    def test_rows_on_simplex(self, ml_scorer, map_scorer, rng):
        z = rng.normal(0, 4, size=(500, 3))
        for s in (softmax(z), ml_score(ml_scorer, z), map_score(map_scorer, z)):
            assert np.max(np.abs(s.sum(axis=1) - 1)) <= 1e-12
            assert np.all((s >= 0) & (s <= 1))


class TestPredict:
    def test_unique_argmax(self):
        assert int(np.argmax([0.2, 0.7, 0.1])) == 1

    def test_tie_goes_to_lowest_index(self):
        scorer = BayesScorer((fit_kde([0.0, 1.0], 1.0), fit_kde([0.0, 1.0], 1.0), fit_kde([5.0, 6.0], 1.0)), None, 0.0)
        cls, scores = predict(scorer, [0.5, 0.5, -40.0])
        assert scores[0] == scores[1]
        assert cls == 0

    def test_softmax_rule(self):
        cls, scores = predict("softmax", [1.0, 2.0, 3.0])
        assert cls == 2
        assert_allclose(scores, softmax([1.0, 2.0, 3.0]))

    def test_explicit_mode_pair(self, map_scorer, rng):
        z = rng.normal(size=(20, 3))
        cls_ml, s_ml = predict((map_scorer, "ml"), z)
        assert_allclose(s_ml, ml_score(map_scorer, z))
        cls_map, _ = predict(map_scorer, z)
        assert cls_map.shape == (20,)

    def test_common_positive_scale_keeps_argmax(self, ml_scorer, rng):
        z = rng.normal(0, 3, size=(100, 3))
        terms = ml_scorer.likelihood_terms(z) + ml_scorer.lam
        for c in (1e-6, 0.37, 42.0):
            assert np.array_equal(np.argmax(terms * c, axis=1), predict(ml_scorer, z)[0])

    def test_unknown_rule(self):
        with pytest.raises(ParameterError):
            predict("argmax", [1.0, 2.0])


def test_scorer_validates_models():
    with pytest.raises(ParameterError):
        BayesScorer((fit_kde([0.0], 1.0),), None, 0.1, mode="map")
    with pytest.raises(ParameterError):
        BayesScorer((fit_kde([0.0], 1.0),), (fit_histogram([0, 1], 2),), -1.0)
    with pytest.raises(ParameterError):
        BayesScorer((fit_kde([0.0], 1.0),), None, 0.1, mode="bayes")
