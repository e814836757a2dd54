import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import BaseEstimator, ClassifierMixin

from faqkit.cotrain import (
    UNLABELED,
    CoTrainingClassifier,
    combined_predict,
    random_view_split,
    split_views,
    write_round_log,
)
from faqkit.datasets import make_two_view
from faqkit.exceptions import DataError
from faqkit.learn.forest import ForestClassifier


class CentroidLearner(ClassifierMixin, BaseEstimator):
    """Row-order independent probabilistic learner: softmax of negative centroid distances."""

    def __init__(self, temperature=1.0):
        self.temperature = temperature

    def fit(self, X, y):
        self.classes_ = np.unique(y)
        self.centroids_ = np.array([X[y == c].mean(axis=0) for c in self.classes_])
        return self

    def predict_proba(self, X):
        d = ((X[:, None, :] - self.centroids_[None]) ** 2).sum(axis=2)
        z = -d / self.temperature
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


class HesitantLearner(ClassifierMixin, BaseEstimator):
    """Never more than 60% sure of anything."""

    def fit(self, X, y):
        self.classes_ = np.unique(y)
        return self

    def predict_proba(self, X):
        P = np.full((len(X), len(self.classes_)), 0.4 / max(len(self.classes_) - 1, 1))
        P[:, 0] = 0.6
        return P


# -- views ---------------------------------------------------------------------------

def test_split_views_projects_columns():
    X = np.arange(12).reshape(2, 6)
    a, b = split_views(X, ([0, 2, 4], [1, 3, 5]))
    np.testing.assert_array_equal(a, [[0, 2, 4], [6, 8, 10]])
    np.testing.assert_array_equal(b, [[1, 3, 5], [7, 9, 11]])


@pytest.mark.parametrize("views", [([0, 1], [1, 2, 3]), ([0], [1, 2]), ([], [0, 1, 2, 3]),
                                   ([0, 0], [1, 2, 3])])
def test_split_views_rejects_bad_partitions(views):
    with pytest.raises(ValueError):
        split_views(np.zeros((2, 4)), views)


@given(st.integers(2, 40), st.integers(0, 1000))
def test_random_view_split_is_bisection(n, seed):
    a, b = random_view_split(n, seed)
    assert sorted(np.concatenate([a, b]).tolist()) == list(range(n))
    assert abs(len(a) - len(b)) <= 1


# -- combined prediction ---------------------------------------------------------------------

def test_combined_uniform_view_returns_other():
    p2 = np.array([[0.2, 0.5, 0.3]])
    out = combined_predict(np.full((1, 3), 1 / 3), p2, [1 / 3] * 3)
    np.testing.assert_allclose(out, p2, atol=1e-15)


def test_combined_certain_view_dominates():
    out = combined_predict([[1.0, 0.0]], [[0.3, 0.7]], [0.5, 0.5])
    np.testing.assert_array_equal(out, [[1.0, 0.0]])


def test_combined_three_class_arithmetic():
    out = combined_predict([0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.5, 0.25, 0.25])
    joint = np.array([0.5 * 0.2 / 0.5, 0.3 * 0.5 / 0.25, 0.2 * 0.3 / 0.25])
    np.testing.assert_allclose(out, joint / joint.sum(), atol=1e-15)
    np.testing.assert_allclose(out, [0.2 / 1.04, 0.6 / 1.04, 0.24 / 1.04], atol=1e-15)


def test_combined_zero_normalizer():
    with pytest.raises(ValueError):
        combined_predict([1.0, 0.0], [0.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        combined_predict([0.5, 0.5], [0.5, 0.5], [1.0, 0.0])


# -- co-training loop ---------------------------------------------------------------------------

def test_no_unlabeled_data_zero_rounds():
    X, y, _, views = make_two_view(40, 0, seed=0)
    clf = CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X, y)
    assert clf.round_log_ == [] and clf.additions_ == []
    np.testing.assert_array_equal(clf.transduction_, y)


def test_threshold_one_never_reached():
    X, _, y, views = make_two_view(30, 60, seed=1)
    clf = CoTrainingClassifier(HesitantLearner(), threshold=1.0, view_split=views).fit(X, y)
    assert clf.additions_ == []
    assert len(clf.round_log_) == 1 and clf.round_log_[0]["u_remaining"] == 60
    np.testing.assert_array_equal(clf.transduction_, y)


def test_errors():
    X, _, y, views = make_two_view(10, 10, seed=0)
    with pytest.raises(DataError):
        CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X, np.full(len(y), UNLABELED))
    with pytest.raises(ValueError):
        CoTrainingClassifier(CentroidLearner(), threshold=0.5, view_split=views).fit(X, y)
    with pytest.raises(ValueError):
        CoTrainingClassifier(CentroidLearner(), k_per_class=0, view_split=views).fit(X, y)


def _check_invariants(clf, y_partial, threshold, k):
    labeled0 = y_partial != UNLABELED
    # original labels untouched, every promotion happens once
    np.testing.assert_array_equal(clf.transduction_[labeled0], y_partial[labeled0])
    idx = [a["index"] for a in clf.additions_]
    assert len(idx) == len(set(idx))
    assert not labeled0[idx].any()
    for a in clf.additions_:
        assert clf.transduction_[a["index"]] == a["label"]
        assert max(a["p1"], a["p2"]) >= threshold
    pools = [labeled0.sum()] + [r["pool_size"] for r in clf.round_log_]
    assert all(b >= a for a, b in zip(pools, pools[1:]))
    for r in clf.round_log_:
        assert r["pool_size"] + r["u_remaining"] == len(y_partial)
        assert all(n <= 2 * k for n in r["added_per_class"].values())
    assert clf.labeled_mask_.sum() == labeled0.sum() + len(idx)


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.floats(0.55, 0.99), st.integers(1, 6))
def test_loop_invariants(seed, threshold, k):
    X, _, y, views = make_two_view(20, 80, seed=seed, separation=1.5)
    clf = CoTrainingClassifier(CentroidLearner(), threshold=threshold, k_per_class=k,
                               view_split=views).fit(X, y)
    _check_invariants(clf, y, threshold, k)


def test_forest_learner_invariants():
    X, _, y, views = make_two_view(30, 90, seed=4)
    clf = CoTrainingClassifier(ForestClassifier(n_trees=15, max_depth=3), view_split=views).fit(X, y)
    _check_invariants(clf, y, 0.9, 5)


@pytest.mark.parametrize("seed", range(3))
def test_row_order_independence(seed):
    X, _, y, views = make_two_view(20, 100, seed=seed, separation=2.0)
    perm = np.random.default_rng(seed).permutation(len(y))
    a = CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X, y)
    b = CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X[perm], y[perm])
    np.testing.assert_array_equal(b.transduction_, a.transduction_[perm])


def test_expansion_accurate_and_combined_classifier():
    X, y_true, y, views = make_two_view(50, 450, seed=0)
    clf = CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X, y)
    added = [a["index"] for a in clf.additions_]
    assert len(added) > 100
    assert np.mean(clf.transduction_[added] == y_true[added]) >= 0.95
    P = clf.predict_proba(X)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(clf.class_prior_.sum(), 1.0)
    assert np.mean(clf.predict(X) == y_true) >= 0.95


def test_default_view_split_is_random_bisection():
    X, _, y, _ = make_two_view(20, 20, seed=0)
    clf = CoTrainingClassifier(CentroidLearner(), random_state=3).fit(X, y)
    for got, want in zip(clf.view_split_, random_view_split(X.shape[1], 3)):
        np.testing.assert_array_equal(got, want)


def test_round_log_file(tmp_path):
    X, _, y, views = make_two_view(20, 40, seed=2)
    clf = CoTrainingClassifier(CentroidLearner(), view_split=views).fit(X, y)
    write_round_log(tmp_path / "rounds.jsonl", clf.round_log_)
    rows = [json.loads(line) for line in (tmp_path / "rounds.jsonl").read_text().splitlines()]
    assert rows == clf.round_log_
