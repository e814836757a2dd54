"""Two-view co-training label expansion and the product-rule combined classifier."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_array, check_is_fitted

from faqkit.exceptions import DataError
from faqkit.learn.forest import ForestClassifier

UNLABELED = -1


def split_views(X, view_split: tuple[Sequence[int], Sequence[int]]):
    """Column-project ``X`` onto two disjoint, exhaustive feature views."""
    X = np.asarray(X)
    cols1 = np.asarray(view_split[0], dtype=np.int64)
    cols2 = np.asarray(view_split[1], dtype=np.int64)
    if len(cols1) == 0 or len(cols2) == 0:
        raise ValueError("each view needs at least one column")
    s1, s2 = set(cols1.tolist()), set(cols2.tolist())
    if len(s1) != len(cols1) or len(s2) != len(cols2) or s1 & s2:
        raise ValueError("views overlap")
    if s1 | s2 != set(range(X.shape[1])):
        raise ValueError("views do not cover every column")
    return X[:, cols1], X[:, cols2]


def random_view_split(n_features: int, seed: int = 0):
    """Random bisection of the column indices."""
    if n_features < 2:
        raise ValueError("need at least two features to form two views")
    perm = np.random.default_rng(seed).permutation(n_features)
    half = n_features // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


def combined_predict(p1, p2, priors) -> np.ndarray:
    """Naive-Bayes style combination: ``p(c|x) ~ p1(c|x) p2(c|x) / prior(c)``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    priors = np.asarray(priors, dtype=float)
    if p1.shape != p2.shape or p1.shape[-1] != len(priors):
        raise ValueError("distributions and priors disagree in shape")
    if (priors <= 0).any():
        raise ValueError("priors must be positive")
    joint = p1 * p2 / priors
    norm = joint.sum(axis=-1, keepdims=True)
    if (norm <= 0).any():
        raise ValueError("all class products are zero; cannot normalize")
    return joint / norm


class CoTrainingClassifier(ClassifierMixin, BaseEstimator):
    """Expand a partially labeled dataset with two classifiers on disjoint feature views.

    Each round both view classifiers are refit on the labeled pool. For each
    view and class, up to ``k_per_class`` unlabeled rows are promoted when
    that view predicts the class with probability at least ``threshold`` and
    the other view's argmax agrees. Promoted rows join the labeled pool of
    both views and are never relabeled.

    Parameters
    ----------
    base_learner : estimator or callable, optional
        Probabilistic classifier (cloned) or zero-argument factory.
        Defaults to a 100-tree :class:`ForestClassifier`.
    threshold : float, default=0.9
    k_per_class : int, default=5
    max_rounds : int, default=50
    view_split : pair of index arrays, optional
        Defaults to a random column bisection seeded by ``random_state``.
    random_state : int, default=0

    Attributes
    ----------
    transduction_ : ndarray
        Labels after expansion; ``-1`` where still unlabeled.
    estimator1_, estimator2_ : fitted view classifiers
    round_log_ : list of dict
    additions_ : list of dict
        Per promoted row: index, label, round, and both views' probabilities.
    """

    def __init__(self, base_learner=None, threshold=0.9, k_per_class=5, max_rounds=50,
                 view_split=None, random_state=0):
        self.base_learner = base_learner
        self.threshold = threshold
        self.k_per_class = k_per_class
        self.max_rounds = max_rounds
        self.view_split = view_split
        self.random_state = random_state

    def _make(self):
        if self.base_learner is None:
            return ForestClassifier(n_trees=100, max_depth=5, random_state=self.random_state)
        if hasattr(self.base_learner, "fit"):
            return clone(self.base_learner)
        return self.base_learner()

    def _views(self, X):
        split = self.view_split_ if hasattr(self, "view_split_") else self.view_split
        return split_views(X, split)

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y).copy()
        if len(y) != len(X):
            raise ValueError("X and y disagree in length")
        if not 0.5 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0.5, 1]")
        if self.k_per_class < 1:
            raise ValueError("k_per_class must be >= 1")
        self.view_split_ = (self.view_split if self.view_split is not None
                            else random_view_split(X.shape[1], self.random_state))
        T1, T2 = self._views(X)
        labeled = y != UNLABELED
        if not labeled.any():
            raise DataError("co-training needs at least one labeled example")
        self.classes_ = np.unique(y[labeled])
        self.round_log_, self.additions_ = [], []

        for round_no in range(1, self.max_rounds + 1):
            unlabeled = np.flatnonzero(~labeled)
            if len(unlabeled) == 0:
                break
            h1 = self._make().fit(T1[labeled], y[labeled])
            h2 = self._make().fit(T2[labeled], y[labeled])
            P1 = h1.predict_proba(T1[unlabeled])
            P2 = h2.predict_proba(T2[unlabeled])
            a1, a2 = P1.argmax(axis=1), P2.argmax(axis=1)
            chosen: dict[int, int] = {}
            for P, arg in ((P1, a1), (P2, a2)):
                for c in range(len(self.classes_)):
                    ok = np.flatnonzero((a1 == a2) & (arg == c) & (P[:, c] >= self.threshold))
                    # stable: probability descending, then row index ascending
                    order = np.lexsort((unlabeled[ok], -P[ok, c]))
                    for j in ok[order][: self.k_per_class]:
                        chosen.setdefault(int(j), c)
            added = np.zeros(len(self.classes_), dtype=np.int64)
            for j, c in sorted(chosen.items()):
                row = int(unlabeled[j])
                y[row] = self.classes_[c]
                labeled[row] = True
                added[c] += 1
                self.additions_.append({"index": row, "label": self.classes_[c].item(),
                                        "round": round_no, "p1": float(P1[j, c]),
                                        "p2": float(P2[j, c])})
            self.round_log_.append({
                "round": round_no,
                "added_per_class": {str(cls): int(n) for cls, n in zip(self.classes_.tolist(), added)},
                "pool_size": int(labeled.sum()),
                "u_remaining": int((~labeled).sum()),
            })
            if added.sum() == 0:
                break

        self.estimator1_ = self._make().fit(T1[labeled], y[labeled])
        self.estimator2_ = self._make().fit(T2[labeled], y[labeled])
        counts = np.array([(y[labeled] == c).sum() for c in self.classes_], dtype=float)
        self.class_prior_ = counts / counts.sum()
        self.transduction_ = y
        self.labeled_mask_ = labeled
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "estimator1_")
        T1, T2 = self._views(check_array(X, dtype=np.float64))
        return combined_predict(self.estimator1_.predict_proba(T1),
                                self.estimator2_.predict_proba(T2), self.class_prior_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def write_round_log(path: str | Path, round_log: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in round_log:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
