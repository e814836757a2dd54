"""FAQ ingestion, number anonymization, text preprocessing and ranking datasets."""

from __future__ import annotations

import json
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from faqkit.exceptions import ConfigurationError, DataError

MAX_RELEVANT = 5

_DIGIT_RUN = re.compile(r"[0-9]+")
_NON_WORD = re.compile(r"[\W_]+", re.UNICODE)
_DIGITS = re.compile(r"\d+", re.UNICODE)


class RankingSample(NamedTuple):
    q_id: int
    doc_id: int
    label: int


@dataclass(frozen=True)
class FaqCollection:
    """Questions, answers and the (question, answer) relevance relation.

    Parameters
    ----------
    questions : mapping of q_id to question text
    answers : mapping of doc_id to answer text
    relevance : set of (q_id, doc_id) pairs marking relevant answers
    """

    questions: Mapping[int, str]
    answers: Mapping[int, str]
    relevance: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "questions", dict(self.questions))
        object.__setattr__(self, "answers", dict(self.answers))
        object.__setattr__(self, "relevance", frozenset((int(q), int(d)) for q, d in self.relevance))
        per_question = defaultdict(int)
        for q_id, doc_id in self.relevance:
            if q_id not in self.questions:
                raise DataError(f"relevance references unknown q_id {q_id}")
            if doc_id not in self.answers:
                raise DataError(f"relevance references unknown doc_id {doc_id}")
            per_question[q_id] += 1
        for q_id in self.questions:
            n = per_question.get(q_id, 0)
            if not 1 <= n <= MAX_RELEVANT:
                raise DataError(f"question {q_id} has {n} relevant answers (expected 1..{MAX_RELEVANT})")

    def relevant(self, q_id: int) -> set[int]:
        return {d for q, d in self.relevance if q == q_id}

    def relevant_map(self) -> dict[int, set[int]]:
        out: dict[int, set[int]] = defaultdict(set)
        for q, d in self.relevance:
            out[q].add(d)
        return dict(out)


@dataclass(frozen=True)
class PreprocessOptions:
    lowercase: bool = True
    strip_accents: bool = True
    remove_punct: bool = True
    remove_numbers: bool = True
    stopword_file: str | None = None
    stemming: bool = False


def anonymize_numbers(text: str, seed: int) -> str:
    """Replace every run of ASCII digits with random digits of the same length."""
    rng = np.random.default_rng(seed)

    def _swap(match: re.Match) -> str:
        digits = rng.integers(0, 10, size=len(match.group()))
        return "".join(str(d) for d in digits)

    return _DIGIT_RUN.sub(_swap, text)


def load_stopwords(path: str | Path) -> frozenset[str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"stopword file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def strip_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFD", text)
    return "".join(ch for ch in decomposed if unicodedata.category(ch) != "Mn")


# Longest suffix first; a light Portuguese suffix stripper.
_SUFFIXES = (
    "amentos", "imentos", "amento", "imento", "acoes", "ações", "mente",
    "idades", "idade", "ancia", "ância", "encia", "ência", "istas", "ismos",
    "acao", "ação", "ista", "ismo", "avel", "ável", "ivel", "ível",
    "oso", "osa", "ais", "eis", "oes", "ões", "aes", "ães",
    "ar", "er", "ir", "as", "es", "os", "a", "e", "o", "s",
)
_MIN_STEM = 3


def stem(token: str) -> str:
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= _MIN_STEM:
            return token[: -len(suffix)]
    return token


def preprocess(text: str, opts: PreprocessOptions | None = None,
               stopwords: Iterable[str] | None = None) -> list[str]:
    """Tokenize ``text`` on whitespace after the enabled transforms.

    Transforms run in a fixed order: lowercase, strip accents, remove
    punctuation, remove numbers, drop stopwords, stem. ``stopwords`` overrides
    ``opts.stopword_file`` when given (avoids re-reading the file per call).
    """
    opts = opts or PreprocessOptions()
    if stopwords is None:
        stopwords = load_stopwords(opts.stopword_file) if opts.stopword_file else frozenset()
    if opts.lowercase:
        text = text.lower()
    if opts.strip_accents:
        text = strip_accents(text)
    if opts.remove_punct:
        text = _NON_WORD.sub(" ", text)
    if opts.remove_numbers:
        text = _DIGITS.sub(" ", text)
    tokens = text.split()
    if stopwords:
        stopwords = frozenset(stopwords)
        tokens = [t for t in tokens if t not in stopwords]
    if opts.stemming:
        tokens = [stem(t) for t in tokens]
    return tokens


class TextPreprocessor(TransformerMixin, BaseEstimator):
    """Map raw strings to token lists with :func:`preprocess`."""

    def __init__(self, lowercase=True, strip_accents=True, remove_punct=True,
                 remove_numbers=True, stopword_file=None, stemming=False):
        self.lowercase = lowercase
        self.strip_accents = strip_accents
        self.remove_punct = remove_punct
        self.remove_numbers = remove_numbers
        self.stopword_file = stopword_file
        self.stemming = stemming

    @property
    def options(self) -> PreprocessOptions:
        return PreprocessOptions(self.lowercase, self.strip_accents, self.remove_punct,
                                 self.remove_numbers, self.stopword_file, self.stemming)

    def fit(self, X=None, y=None):
        self.stopwords_ = load_stopwords(self.stopword_file) if self.stopword_file else frozenset()
        return self

    def transform(self, X):
        if not hasattr(self, "stopwords_"):
            self.fit()
        opts = self.options
        return [preprocess(text, opts, self.stopwords_) for text in X]


def build_ranking_dataset(faq: FaqCollection, m: int, seed: int) -> list[RankingSample]:
    """Build ``m`` candidate samples per question.

    All relevant answers become label-1 samples; the remaining ``m - n_pos``
    slots are filled with distinct non-relevant answers drawn uniformly
    without replacement, independently per question.
    """
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    doc_ids = np.array(sorted(faq.answers), dtype=np.int64)
    if m > len(doc_ids):
        raise ValueError(f"m={m} exceeds the number of answers ({len(doc_ids)})")
    relevant = faq.relevant_map()
    rng = np.random.default_rng(seed)
    samples: list[RankingSample] = []
    for q_id in sorted(faq.questions):
        positives = sorted(relevant[q_id])
        if len(positives) > m:
            raise ValueError(f"question {q_id} has {len(positives)} relevant answers > m={m}")
        pool = doc_ids[~np.isin(doc_ids, positives)]
        negatives = rng.choice(pool, size=m - len(positives), replace=False)
        samples.extend(RankingSample(q_id, d, 1) for d in positives)
        samples.extend(RankingSample(q_id, int(d), 0) for d in negatives)
    return samples


def split(samples: Sequence[RankingSample], ratio: float, seed: int):
    """Partition samples by question into (train, test).

    ``ratio`` is the fraction of questions assigned to train.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    q_ids = np.array(sorted({s.q_id for s in samples}), dtype=np.int64)
    n_train = int(round(ratio * len(q_ids)))
    if len(q_ids) >= 2:
        n_train = min(max(n_train, 1), len(q_ids) - 1)
    order = np.random.default_rng(seed).permutation(len(q_ids))
    train_ids = set(q_ids[order[:n_train]].tolist())
    train = [s for s in samples if s.q_id in train_ids]
    test = [s for s in samples if s.q_id not in train_ids]
    return train, test


def imbalance_stats(samples: Sequence[RankingSample]) -> tuple[float, float]:
    if len(samples) == 0:
        raise ValueError("imbalance_stats of an empty sample set")
    pos = sum(1 for s in samples if s.label == 1) / len(samples)
    return pos, 1.0 - pos


def group_by_question(samples: Iterable[RankingSample]) -> dict[int, list[RankingSample]]:
    groups: dict[int, list[RankingSample]] = defaultdict(list)
    for s in samples:
        groups[s.q_id].append(s)
    return dict(groups)


# -- JSON-lines I/O -----------------------------------------------------------

def write_faq_jsonl(path: str | Path, faq: FaqCollection,
                    samples: Sequence[RankingSample] | None = None) -> None:
    """Write one line per sample; with no samples, one line per relevance pair."""
    if samples is None:
        samples = [RankingSample(q, d, 1) for q, d in sorted(faq.relevance)]
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            row = {"q_id": s.q_id, "question": faq.questions[s.q_id], "doc_id": s.doc_id,
                   "answer": faq.answers[s.doc_id], "label": s.label}
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def read_faq_jsonl(path: str | Path) -> tuple[FaqCollection, list[RankingSample]]:
    questions: dict[int, str] = {}
    answers: dict[int, str] = {}
    relevance: set[tuple[int, int]] = set()
    samples: list[RankingSample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                q_id, doc_id, label = int(row["q_id"]), int(row["doc_id"]), int(row["label"])
                question, answer = str(row["question"]), str(row["answer"])
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed FAQ row ({exc})") from exc
            if label not in (0, 1):
                raise DataError(f"{path}:{lineno}: label must be 0 or 1")
            if questions.setdefault(q_id, question) != question:
                raise DataError(f"{path}:{lineno}: conflicting text for q_id {q_id}")
            if answers.setdefault(doc_id, answer) != answer:
                raise DataError(f"{path}:{lineno}: conflicting text for doc_id {doc_id}")
            if label:
                relevance.add((q_id, doc_id))
            samples.append(RankingSample(q_id, doc_id, label))
    if not samples:
        raise DataError(f"{path}: no FAQ rows")
    return FaqCollection(questions, answers, frozenset(relevance)), samples
