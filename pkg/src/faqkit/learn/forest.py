"""Bagged Gini decision trees (random forest) with class-probability leaves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from faqkit.exceptions import DataError


@dataclass(frozen=True)
class Tree:
    """Flat array tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        for _ in range(self.depth):
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                break
            rows = np.flatnonzero(internal)
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True)
class TreeEnsemble:
    trees: tuple[Tree, ...]
    n_classes: int
    max_depth: int
    seeds: tuple[int, ...]


def _gini_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    p = counts / totals[:, None]
    return 1.0 - (p * p).sum(axis=1)


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features: np.ndarray):
    n = len(y)
    best = (np.inf, -1, 0.0)
    onehot = np.eye(n_classes)[y]
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if len(valid) == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[valid]
        n_left = (valid + 1).astype(float)
        right = onehot.sum(axis=0) - left
        n_right = n - n_left
        impurity = (n_left * _gini_from_counts(left, n_left)
                    + n_right * _gini_from_counts(right, n_right)) / n
        i = int(np.argmin(impurity))
        if impurity[i] < best[0]:
            cut = valid[i]
            threshold = (xs[cut] + xs[cut + 1]) / 2.0
            if threshold >= xs[cut + 1]:
                threshold = xs[cut]
            best = (float(impurity[i]), int(f), float(threshold))
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_depth: int,
             max_features: int, rng: np.random.Generator) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(None)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes).astype(float)
        value[node] = counts / counts.sum()
        if depth >= max_depth or np.count_nonzero(counts) <= 1 or len(idx) < 2:
            continue
        features = rng.choice(X.shape[1], size=max_features, replace=False)
        _, f, thr = _best_split(X[idx], y[idx], n_classes, features)
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        lo, hi = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node] = f, thr, lo, hi
        stack.append((hi, idx[~mask], depth + 1))
        stack.append((lo, idx[mask], depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.vstack(value), max_depth)


def _max_features(setting, n_features: int) -> int:
    if setting == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if setting is None:
        return n_features
    return max(1, min(int(setting), n_features))


def fit_forest(X, y, n_trees: int = 450, max_depth: int = 5, seed: int = 0,
               max_features="sqrt") -> TreeEnsemble:
    """Bootstrap one Gini tree per seed ``seed + tree_index``.

    ``y`` holds class indices ``0..K-1``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(X) != len(y):
        raise DataError("forest needs a nonempty X with one label per row")
    if not np.isfinite(X).all():
        raise DataError("forest features must be finite")
    n_classes = int(y.max()) + 1
    k = _max_features(max_features, X.shape[1])
    trees, seeds = [], []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        boot = rng.integers(0, len(y), size=len(y))
        trees.append(fit_tree(X[boot], y[boot], n_classes, max_depth, k, rng))
        seeds.append(seed + t)
    return TreeEnsemble(tuple(trees), n_classes, max_depth, tuple(seeds))


def predict_proba(ensemble: TreeEnsemble, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    total = np.zeros((len(X), ensemble.n_classes))
    for tree in ensemble.trees:
        total += tree.predict_proba(X)
    return total / len(ensemble.trees)


class ForestClassifier(ClassifierMixin, BaseEstimator):
    """Random forest: bootstrap samples, Gini splits, ``sqrt(d)`` features per split.

    Parameters
    ----------
    n_trees : int, default=450
    max_depth : int, default=5
    max_features : {"sqrt"} or int or None, default="sqrt"
    random_state : int, default=0
        Tree ``i`` is grown from seed ``random_state + i``.
    """

    def __init__(self, n_trees=450, max_depth=5, max_features="sqrt", random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.ensemble_ = fit_forest(X, y_idx, self.n_trees, self.max_depth,
                                    self.random_state, self.max_features)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "ensemble_")
        X = check_array(X, dtype=np.float64)
        return predict_proba(self.ensemble_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
