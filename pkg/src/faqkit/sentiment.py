"""Sentiment classification: preprocessing, n-gram LSA features, a forest or dense head, and a catalog prefilter."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from faqkit.corpus import PreprocessOptions, preprocess
from faqkit.exceptions import DataError
from faqkit.features.lsa import LatentSemanticAnalysis
from faqkit.features.similarity import prefilter_match
from faqkit.learn.forest import ForestClassifier
from faqkit.learn.rankers import DenseClassifier

HEADS = ("forest", "dense")


class SentimentClassifier(ClassifierMixin, BaseEstimator):
    """Text classifier over LSA projections of TF-IDF n-grams.

    Parameters
    ----------
    head : {"forest", "dense"}, default="forest"
    n_components : int, default=100
    n_max : int, default=3
    n_trees, max_depth : forest settings
    hidden, lr, epochs : dense-head settings
    catalog : list of (text, label), optional
        Known messages answered by exact or near-exact match before the model.
    max_edit_ratio : float, default=0.2
    stemming : bool, default=False
    random_state : int, default=42
    """

    def __init__(self, head="forest", n_components=100, n_max=3, n_trees=450, max_depth=5,
                 hidden=32, lr=5e-5, epochs=5, catalog=None, max_edit_ratio=0.2, stemming=False,
                 random_state=42):
        self.head = head
        self.n_components = n_components
        self.n_max = n_max
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.catalog = catalog
        self.max_edit_ratio = max_edit_ratio
        self.stemming = stemming
        self.random_state = random_state

    def _tokens(self, texts):
        opts = PreprocessOptions(stemming=self.stemming)
        return [preprocess(t, opts) for t in texts]

    def _make_head(self):
        if self.head == "forest":
            return ForestClassifier(self.n_trees, self.max_depth, random_state=self.random_state)
        if self.head == "dense":
            return DenseClassifier(arch="mlp", hidden=self.hidden, lr=self.lr, epochs=self.epochs,
                                   random_state=self.random_state)
        raise ValueError(f"head must be one of {HEADS}")

    def fit(self, texts: Sequence[str], y):
        if len(texts) == 0 or len(texts) != len(y):
            raise DataError("need a nonempty set of texts with one label each")
        self.lsa_ = LatentSemanticAnalysis(self.n_components, self.n_max).fit(self._tokens(texts))
        self.head_ = self._make_head().fit(self.transform(texts), np.asarray(y))
        self.classes_ = self.head_.classes_
        return self

    def transform(self, texts: Sequence[str]) -> np.ndarray:
        check_is_fitted(self, "lsa_")
        return self.lsa_.transform(self._tokens(texts))

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        check_is_fitted(self, "head_")
        return self.head_.predict_proba(self.transform(texts))

    def predict(self, texts: Sequence[str]) -> np.ndarray:
        check_is_fitted(self, "head_")
        pred = self.head_.predict(self.transform(texts)).astype(object)
        if self.catalog:
            opts = PreprocessOptions(stemming=self.stemming)
            for i, text in enumerate(texts):
                label = prefilter_match(text, self.catalog, self.max_edit_ratio, opts)
                if label is not None:
                    pred[i] = label
        return pred
