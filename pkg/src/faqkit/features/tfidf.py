"""Word n-gram TF-IDF term-document matrices."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from faqkit.exceptions import DataError

NGRAM_SEP = "_"


def ngrams(tokens: Sequence[str], n_max: int = 3) -> Counter:
    """Multiset of all contiguous n-grams for n = 1..n_max, joined with ``_``."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    grams: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            grams[NGRAM_SEP.join(tokens[i:i + n])] += 1
    return grams


@dataclass(frozen=True)
class TermDocMatrix:
    """TF-IDF weights with documents as rows (``rows.T`` is the term-by-document matrix)."""

    vocabulary: dict
    rows: sp.csr_matrix
    idf: np.ndarray
    n_max: int = 3

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)

    def term_doc(self) -> np.ndarray:
        """Dense terms x documents matrix."""
        return self.rows.T.toarray()

    def transform(self, corpus: Sequence[Sequence[str]]) -> sp.csr_matrix:
        """TF-IDF rows for new documents; unseen n-grams are dropped."""
        indptr, indices, data = [0], [], []
        for tokens in corpus:
            counts = ngrams(tokens, self.n_max)
            row = {}
            for gram, tf in counts.items():
                col = self.vocabulary.get(gram)
                if col is not None:
                    row[col] = tf * self.idf[col]
            for col in sorted(row):
                indices.append(col)
                data.append(row[col])
            indptr.append(len(indices))
        return sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64),
                              np.asarray(indptr, dtype=np.int64)),
                             shape=(len(corpus), self.n_terms))


def tfidf_fit(corpus: Sequence[Sequence[str]], n_max: int = 3) -> TermDocMatrix:
    """Raw-count TF times unsmoothed ``ln(N / df)`` IDF over 1..n_max-grams."""
    if len(corpus) == 0:
        raise DataError("tfidf_fit on an empty corpus")
    counts = [ngrams(tokens, n_max) for tokens in corpus]
    df: Counter = Counter()
    for c in counts:
        df.update(c.keys())
    vocabulary = {gram: i for i, gram in enumerate(sorted(df))}
    n = len(corpus)
    idf = np.array([math.log(n / df[g]) for g in sorted(df)], dtype=float)
    matrix = TermDocMatrix(vocabulary, sp.csr_matrix((n, len(vocabulary))), idf, n_max)
    rows = matrix.transform(corpus)
    return TermDocMatrix(vocabulary, rows, idf, n_max)


class NgramTfidfVectorizer(TransformerMixin, BaseEstimator):
    """TF-IDF over word n-grams of pre-tokenized documents."""

    def __init__(self, n_max=3):
        self.n_max = n_max

    def fit(self, X, y=None):
        self.matrix_ = tfidf_fit(list(X), self.n_max)
        self.vocabulary_ = self.matrix_.vocabulary
        self.idf_ = self.matrix_.idf
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).matrix_.rows

    def transform(self, X):
        check_is_fitted(self, "matrix_")
        return self.matrix_.transform(list(X))

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "matrix_")
        return np.array(sorted(self.vocabulary_, key=self.vocabulary_.get), dtype=object)
