"""WordPiece vocabulary training and greedy longest-match tokenization."""

from __future__ import annotations

import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from faqkit.exceptions import DataError

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIALS = (PAD, UNK, CLS, SEP, MASK)
CONTINUATION = "##"
MAX_WORD_CHARS = 100
DEFAULT_VOCAB_SIZE = 34100


def normalize(text: str) -> str:
    """NFKC-normalize and lowercase; accents are kept."""
    return unicodedata.normalize("NFKC", text).lower()


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    continuation_prefix: str = CONTINUATION
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise DataError("vocabulary tokens are not unique")
        if self.tokens[: len(SPECIALS)] != SPECIALS:
            raise DataError(f"vocabulary must start with the special tokens {SPECIALS}")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh]
        return cls(tuple(t for t in tokens if t))


@dataclass(frozen=True)
class TokenSequence:
    ids: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.ids)


def _initial_split(word: str) -> tuple[str, ...]:
    return (word[0],) + tuple(CONTINUATION + ch for ch in word[1:])


def _merge_symbols(a: str, b: str) -> str:
    return a + b[len(CONTINUATION):]


def _word_counts(corpus: Iterable[str]) -> Counter:
    counts: Counter = Counter()
    for text in corpus:
        for word in normalize(text).split():
            if len(word) <= MAX_WORD_CHARS:
                counts[word] += 1
    return counts


class _MergeState:
    """Incremental pair/symbol statistics over the segmented word list."""

    def __init__(self, counts: Counter):
        self.words = [list(_initial_split(w)) for w in sorted(counts)]
        self.freqs = [counts[w] for w in sorted(counts)]
        self.symbols: Counter = Counter()
        self.pairs: Counter = Counter()
        self.where: dict[tuple[str, str], set[int]] = defaultdict(set)
        for i, syms in enumerate(self.words):
            self._add(i, syms, +1)

    def _add(self, i: int, syms: list[str], sign: int) -> None:
        f = self.freqs[i] * sign
        for s in syms:
            self.symbols[s] += f
        for pair in zip(syms, syms[1:]):
            self.pairs[pair] += f
            if sign > 0:
                self.where[pair].add(i)

    def best_pair(self, min_frequency: int):
        best, best_score = None, -1.0
        for pair, count in self.pairs.items():
            if count < min_frequency:
                continue
            score = count / (self.symbols[pair[0]] * self.symbols[pair[1]])
            if score > best_score or (score == best_score and pair < best):
                best, best_score = pair, score
        return best

    def merge(self, pair: tuple[str, str]) -> str:
        a, b = pair
        merged = _merge_symbols(a, b)
        for i in sorted(self.where.pop(pair, ())):
            old = self.words[i]
            self._add(i, old, -1)
            new, j = [], 0
            while j < len(old):
                if j + 1 < len(old) and old[j] == a and old[j + 1] == b:
                    new.append(merged)
                    j += 2
                else:
                    new.append(old[j])
                    j += 1
            self.words[i] = new
            self._add(i, new, +1)
        for key in [k for k, v in self.pairs.items() if v <= 0]:
            del self.pairs[key]
            self.where.pop(key, None)
        return merged


def train_vocab(corpus: Sequence[str], vocab_size: int = DEFAULT_VOCAB_SIZE,
                min_frequency: int = 2) -> Vocabulary:
    """Train a WordPiece vocabulary.

    Starts from the character alphabet (word-initial characters and
    ``##``-prefixed continuations) and repeatedly merges the adjacent pair
    with the highest ``count(ab) / (count(a) * count(b))``; ties go to the
    lexicographically smallest pair. Stops at ``vocab_size`` tokens or when
    no pair occurs at least ``min_frequency`` times.
    """
    counts = _word_counts(corpus)
    if not counts:
        raise DataError("cannot train a vocabulary on an empty corpus")
    state = _MergeState(counts)
    alphabet = sorted(state.symbols)
    if vocab_size < len(SPECIALS) + len(alphabet):
        raise ValueError(f"vocab_size={vocab_size} is smaller than specials + alphabet "
                         f"({len(SPECIALS) + len(alphabet)})")
    tokens = list(SPECIALS) + alphabet
    seen = set(tokens)
    while len(tokens) < vocab_size:
        pair = state.best_pair(min_frequency)
        if pair is None:
            break
        merged = state.merge(pair)
        if merged not in seen:
            seen.add(merged)
            tokens.append(merged)
    return Vocabulary(tuple(tokens))


def tokenize_word(word: str, vocab: Vocabulary) -> list[int]:
    if len(word) > MAX_WORD_CHARS:
        return [vocab.unk_id]
    ids, start = [], 0
    while start < len(word):
        end, found = len(word), None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = vocab.continuation_prefix + piece
            if piece in vocab.index:
                found = vocab.index[piece]
                break
            end -= 1
        if found is None:
            return [vocab.unk_id]
        ids.append(found)
        start = end
    return ids


def tokenize(text: str, vocab: Vocabulary) -> TokenSequence:
    ids: list[int] = []
    for word in normalize(text).split():
        ids.extend(tokenize_word(word, vocab))
    return TokenSequence(tuple(ids))


def detokenize(seq: TokenSequence, vocab: Vocabulary) -> str:
    words: list[str] = []
    prefix = vocab.continuation_prefix
    for i in seq.ids:
        tok = vocab.tokens[i]
        if tok.startswith(prefix) and words:
            words[-1] += tok[len(prefix):]
        else:
            words.append(tok)
    return " ".join(words)


def length_stats(corpus: Sequence[str], vocab: Vocabulary) -> tuple[float, float, float]:
    """Mean, median and 95th percentile of token counts over ``corpus``."""
    if len(corpus) == 0:
        raise DataError("length_stats of an empty corpus")
    lengths = np.array([tokenize(text, vocab).length for text in corpus], dtype=float)
    return float(lengths.mean()), float(np.percentile(lengths, 50)), float(np.percentile(lengths, 95))


def char_vocab(corpus: Sequence[str]) -> Vocabulary:
    """Character-only vocabulary over ``corpus`` (no merges)."""
    counts = _word_counts(corpus)
    if not counts:
        raise DataError("cannot build a vocabulary from an empty corpus")
    alphabet = sorted({s for w in counts for s in _initial_split(w)})
    return Vocabulary(SPECIALS + tuple(alphabet))


class WordPieceTokenizer(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` trains a vocabulary, ``transform`` encodes texts."""

    def __init__(self, vocab_size=DEFAULT_VOCAB_SIZE, min_frequency=2):
        self.vocab_size = vocab_size
        self.min_frequency = min_frequency

    def fit(self, X, y=None):
        self.vocab_ = train_vocab(list(X), self.vocab_size, self.min_frequency)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocab_")
        return [tokenize(text, self.vocab_) for text in X]
