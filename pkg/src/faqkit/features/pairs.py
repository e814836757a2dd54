"""Question-answer pair featurization: the encoder that feeds the ranking heads."""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from faqkit import bm25
from faqkit.corpus import PreprocessOptions, load_stopwords, preprocess
from faqkit.exceptions import DataError
from faqkit.features.lsa import LatentSemanticAnalysis, load_lsa, save_lsa

_MAGIC = b"FQKF"
_VERSION = 1

BASE_FEATURES = ("lsa_cosine", "bm25_minmax", "jaccard", "length_ratio")


def jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def length_ratio(a: Sequence[str], b: Sequence[str]) -> float:
    la, lb = len(a), len(b)
    if max(la, lb) == 0:
        return 1.0
    return min(la, lb) / max(la, lb)


def minmax(values: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant group maps to zeros."""
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def safe_cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def faq_fit_texts(faq, q_ids) -> list[str]:
    """Fitting corpus: every answer, plus each given question joined with its relevant answers.

    The joined entries let the latent space connect question wording with
    answer wording.
    """
    texts = [faq.answers[d] for d in sorted(faq.answers)]
    for q in sorted(q_ids):
        texts.append(" ".join([faq.questions[q]] + [faq.answers[d] for d in sorted(faq.relevant(q))]))
    return texts


class PairFeaturizer(BaseEstimator):
    """Fixed-length features for (question, answer) pairs.

    Each pair maps to ``[lsa_cosine, bm25_minmax, jaccard, length_ratio]``,
    optionally followed by the question and answer LSA vectors. The BM25+
    score is min-max normalized within the candidate group of one question.

    Parameters
    ----------
    n_components : int, default=100
    n_max : int, default=3
    k1, b, delta : float
        BM25+ parameters.
    include_lsa_vectors : bool, default=False
    stemming : bool, default=False
    stopword_file : str or None
    """

    def __init__(self, n_components=100, n_max=3, k1=1.2, b=0.75, delta=1.0,
                 include_lsa_vectors=False, stemming=False, stopword_file=None):
        self.n_components = n_components
        self.n_max = n_max
        self.k1 = k1
        self.b = b
        self.delta = delta
        self.include_lsa_vectors = include_lsa_vectors
        self.stemming = stemming
        self.stopword_file = stopword_file

    @property
    def _opts(self) -> PreprocessOptions:
        return PreprocessOptions(stemming=self.stemming, stopword_file=self.stopword_file)

    def tokens(self, text: str) -> list[str]:
        if not hasattr(self, "_stopwords"):
            self._stopwords = load_stopwords(self.stopword_file) if self.stopword_file else frozenset()
        return preprocess(text, self._opts, self._stopwords)

    def fit(self, X, y=None):
        """Fit LSA and BM25+ collection statistics on the texts ``X``."""
        tokens = [self.tokens(t) for t in X]
        if not tokens:
            raise DataError("PairFeaturizer.fit needs at least one document")
        self.lsa_ = LatentSemanticAnalysis(self.n_components, self.n_max).fit(tokens)
        self.index_ = bm25.build_index(enumerate(tokens))
        self.n_features_out_ = len(BASE_FEATURES) + (2 * self.lsa_.n_components_
                                                     if self.include_lsa_vectors else 0)
        return self

    @property
    def bm25_params(self) -> bm25.Bm25Params:
        return bm25.Bm25Params(self.k1, self.b, self.delta)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "lsa_")
        names = list(BASE_FEATURES)
        if self.include_lsa_vectors:
            k = self.lsa_.n_components_
            names += [f"q_lsa{i}" for i in range(k)] + [f"a_lsa{i}" for i in range(k)]
        return np.array(names, dtype=object)

    def featurize(self, question: str, answers: Sequence[str]) -> np.ndarray:
        """Feature matrix for one question against its candidate answers."""
        check_is_fitted(self, "lsa_")
        if len(answers) == 0:
            raise ValueError("no candidate answers")
        q_tok = self.tokens(question)
        a_toks = [self.tokens(a) for a in answers]
        vecs = self.lsa_.transform([q_tok] + a_toks)
        q_vec, a_vecs = vecs[0], vecs[1:]
        raw_bm25 = np.array([bm25.score_document(q_tok, a, self.index_, self.bm25_params)
                             for a in a_toks])
        cols = [
            np.array([safe_cosine(q_vec, v) for v in a_vecs]),
            minmax(raw_bm25),
            np.array([jaccard(q_tok, a) for a in a_toks]),
            np.array([length_ratio(q_tok, a) for a in a_toks]),
        ]
        out = np.column_stack(cols)
        if self.include_lsa_vectors:
            out = np.hstack([out, np.tile(q_vec, (len(answers), 1)), a_vecs])
        return out

    def pair_features(self, question: str, answer: str) -> np.ndarray:
        return self.featurize(question, [answer])[0]

    def transform(self, pairs: Sequence[tuple[str, str]], groups=None) -> np.ndarray:
        """Features for ``(question, answer)`` pairs.

        ``groups`` assigns each pair to a question for BM25 normalization; by
        default pairs sharing the question text form one group.
        """
        check_is_fitted(self, "lsa_")
        if groups is None:
            groups = [q for q, _ in pairs]
        members: dict = {}
        for i, g in enumerate(groups):
            members.setdefault(g, []).append(i)
        out = np.zeros((len(pairs), self.n_features_out_))
        for idx in members.values():
            question = pairs[idx[0]][0]
            out[idx] = self.featurize(question, [pairs[i][1] for i in idx])
        return out

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "lsa_")
        header = {
            "params": self.get_params(),
            "postings": {t: [list(p) for p in plist] for t, plist in self.index_.postings.items()},
            "doc_lengths": [[d, n] for d, n in sorted(self.index_.doc_lengths.items())],
        }
        raw = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQ", _VERSION, len(raw)))
            fh.write(raw)
            save_lsa(self.lsa_, fh)

    @classmethod
    def load(cls, path: str | Path) -> "PairFeaturizer":
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise DataError(f"{path}: not a featurizer file")
            version, n = struct.unpack("<IQ", fh.read(12))
            if version != _VERSION:
                raise DataError(f"{path}: unsupported featurizer version {version}")
            header = json.loads(fh.read(n).decode("utf-8"))
            lsa = load_lsa(fh)
        model = cls(**header["params"])
        model.lsa_ = lsa
        postings = {t: tuple(tuple(p) for p in plist) for t, plist in header["postings"].items()}
        lengths = dict((int(d), int(n)) for d, n in header["doc_lengths"])
        avgdl = sum(lengths.values()) / len(lengths) if lengths else 0.0
        model.index_ = bm25.InvertedIndex(postings, lengths, avgdl, len(lengths))
        model.n_features_out_ = len(BASE_FEATURES) + (2 * lsa.n_components_
                                                      if model.include_lsa_vectors else 0)
        return model
