"""Inverted index and BM25+ scoring."""

from __future__ import annotations

import json
import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from faqkit.exceptions import DataError

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    delta: float = 1.0

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class InvertedIndex:
    postings: Mapping[str, tuple[tuple[int, int], ...]]
    doc_lengths: Mapping[int, int]
    avgdl: float
    n_docs: int
    _tf: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_tf", {t: dict(p) for t, p in self.postings.items()})

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, doc_id: int) -> int:
        return self._tf.get(term, {}).get(doc_id, 0)

    @property
    def doc_ids(self) -> np.ndarray:
        return np.array(sorted(self.doc_lengths), dtype=np.int64)


def build_index(docs: Iterable[tuple[int, Sequence[str]]]) -> InvertedIndex:
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: dict[int, int] = {}
    for doc_id, tokens in docs:
        doc_id = int(doc_id)
        if doc_id in doc_lengths:
            raise DataError(f"duplicate doc_id {doc_id}")
        doc_lengths[doc_id] = len(tokens)
        for term, count in Counter(tokens).items():
            postings.setdefault(term, []).append((doc_id, count))
    n_docs = len(doc_lengths)
    avgdl = sum(doc_lengths.values()) / n_docs if n_docs else 0.0
    frozen = {t: tuple(sorted(p)) for t, p in sorted(postings.items())}
    return InvertedIndex(frozen, doc_lengths, avgdl, n_docs)


def idf(df: int, n_docs: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def _length_norm(length: int, index: InvertedIndex, params: Bm25Params) -> float:
    ratio = length / index.avgdl if index.avgdl > 0 else 1.0
    return params.k1 * (1.0 - params.b + params.b * ratio)


def _check_nonempty(index: InvertedIndex) -> None:
    if index.n_docs == 0:
        raise DataError("cannot score against an empty index")


def score_document(query: Sequence[str], doc_tokens: Sequence[str], index: InvertedIndex,
                   params: Bm25Params = Bm25Params()) -> float:
    """BM25+ of an arbitrary token list against the collection statistics of ``index``."""
    _check_nonempty(index)
    counts = Counter(doc_tokens)
    norm = _length_norm(len(doc_tokens), index, params)
    total = 0.0
    for term in query:
        tf = counts.get(term, 0)
        sat = tf * (params.k1 + 1.0) / (tf + norm)
        total += idf(index.df(term), index.n_docs) * (sat + params.delta)
    return total


def score(query: Sequence[str], doc_id: int, index: InvertedIndex,
          params: Bm25Params = Bm25Params()) -> float:
    """BM25+ score of an indexed document, summed over every query term.

    The lower-bound ``delta`` is added for each query term whether or not
    the term occurs in the document.
    """
    _check_nonempty(index)
    if doc_id not in index.doc_lengths:
        raise KeyError(f"unknown doc_id {doc_id}")
    norm = _length_norm(index.doc_lengths[doc_id], index, params)
    total = 0.0
    for term in query:
        tf = index.tf(term, doc_id)
        sat = tf * (params.k1 + 1.0) / (tf + norm)
        total += idf(index.df(term), index.n_docs) * (sat + params.delta)
    return total


def score_all(query: Sequence[str], index: InvertedIndex,
              params: Bm25Params = Bm25Params()) -> tuple[np.ndarray, np.ndarray]:
    """Scores of every document; returns ``(doc_ids, scores)`` sorted by doc_id."""
    _check_nonempty(index)
    doc_ids = index.doc_ids
    position = {d: i for i, d in enumerate(doc_ids.tolist())}
    lengths = np.array([index.doc_lengths[d] for d in doc_ids.tolist()], dtype=float)
    ratio = lengths / index.avgdl if index.avgdl > 0 else np.ones_like(lengths)
    norm = params.k1 * (1.0 - params.b + params.b * ratio)
    scores = np.zeros(len(doc_ids))
    for term in query:
        tf = np.zeros(len(doc_ids))
        for d, count in index.postings.get(term, ()):
            tf[position[d]] = count
        w = idf(index.df(term), index.n_docs)
        scores += w * (tf * (params.k1 + 1.0) / (tf + norm) + params.delta)
    return doc_ids, scores


def search(query: Sequence[str], index: InvertedIndex, params: Bm25Params = Bm25Params(),
           k: int = 10) -> list[tuple[int, float]]:
    """Top-``k`` documents by descending score, ties by ascending doc_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    doc_ids, scores = score_all(query, index, params)
    order = np.lexsort((doc_ids, -scores))[:k]
    return [(int(doc_ids[i]), float(scores[i])) for i in order]


# -- persistence --------------------------------------------------------------

def save_index(index: InvertedIndex, directory: str | Path, meta: dict | None = None) -> None:
    """Write ``postings.bin``, ``docs.bin`` and ``stats.json`` into ``directory``.

    Binary records are little-endian and length-prefixed: each term is
    ``u32 nbytes, utf-8 bytes, u32 npostings`` followed by ``(i64 doc_id, u32 tf)``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "postings.bin", "wb") as fh:
        fh.write(struct.pack("<I", len(index.postings)))
        for term, plist in index.postings.items():
            raw = term.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", len(plist)))
            for doc_id, tf in plist:
                fh.write(struct.pack("<qI", doc_id, tf))
    with open(directory / "docs.bin", "wb") as fh:
        fh.write(struct.pack("<I", index.n_docs))
        for doc_id in sorted(index.doc_lengths):
            fh.write(struct.pack("<qI", doc_id, index.doc_lengths[doc_id]))
    stats = {"format_version": INDEX_FORMAT_VERSION, "n_docs": index.n_docs,
             "avgdl": index.avgdl, "n_terms": len(index.postings)}
    if meta:
        stats["meta"] = meta
    with open(directory / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)


def load_index(directory: str | Path) -> tuple[InvertedIndex, dict]:
    directory = Path(directory)
    try:
        with open(directory / "stats.json", encoding="utf-8") as fh:
            stats = json.load(fh)
        postings: dict[str, tuple[tuple[int, int], ...]] = {}
        with open(directory / "postings.bin", "rb") as fh:
            (n_terms,) = struct.unpack("<I", fh.read(4))
            for _ in range(n_terms):
                (nbytes,) = struct.unpack("<I", fh.read(4))
                term = fh.read(nbytes).decode("utf-8")
                (n,) = struct.unpack("<I", fh.read(4))
                postings[term] = tuple(struct.unpack("<qI", fh.read(12)) for _ in range(n))
        with open(directory / "docs.bin", "rb") as fh:
            (n_docs,) = struct.unpack("<I", fh.read(4))
            doc_lengths = dict(struct.unpack("<qI", fh.read(12)) for _ in range(n_docs))
    except (OSError, struct.error, ValueError, KeyError) as exc:
        raise DataError(f"cannot read index at {directory}: {exc}") from exc
    if stats.get("format_version") != INDEX_FORMAT_VERSION:
        raise DataError(f"unsupported index format {stats.get('format_version')}")
    index = InvertedIndex(postings, doc_lengths, float(stats["avgdl"]), int(stats["n_docs"]))
    return index, stats.get("meta", {})


class BM25Plus(BaseEstimator):
    """BM25+ retriever over pre-tokenized documents.

    Parameters
    ----------
    k1 : float, default=1.2
        Term-frequency saturation.
    b : float, default=0.75
        Length normalization strength.
    delta : float, default=1.0
        Lower bound added per query term.
    """

    def __init__(self, k1=1.2, b=0.75, delta=1.0):
        self.k1 = k1
        self.b = b
        self.delta = delta

    @property
    def params(self) -> Bm25Params:
        return Bm25Params(self.k1, self.b, self.delta)

    def fit(self, X, doc_ids=None):
        X = list(X)
        if doc_ids is None:
            doc_ids = range(len(X))
        self.index_ = build_index(zip(doc_ids, X))
        return self

    def score(self, query, doc_id):
        check_is_fitted(self, "index_")
        return score(query, doc_id, self.index_, self.params)

    def score_tokens(self, query, doc_tokens):
        check_is_fitted(self, "index_")
        return score_document(query, doc_tokens, self.index_, self.params)

    def search(self, query, k=10):
        check_is_fitted(self, "index_")
        return search(query, self.index_, self.params, k)
