"""BILOU span codec, window token features, a dense token tagger and exact-match entity F1."""

from __future__ import annotations

import json
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from faqkit.exceptions import DataError
from faqkit.features.lsa import LatentSemanticAnalysis
from faqkit.learn.rankers import DenseClassifier

DEFAULT_N_CLASSES = 16
PREFIXES = ("B", "I", "L", "U")
LENGTH_BUCKETS = (2, 5, 9)  # upper bounds of the first three buckets
N_SHAPE = 2 + len(LENGTH_BUCKETS) + 1


class EntitySpan(NamedTuple):
    """Tokens ``[start, end)`` of one entity."""

    start: int
    end: int
    class_name: str


def default_classes(n: int = DEFAULT_N_CLASSES) -> list[str]:
    return [f"ENT{i:02d}" for i in range(n)]


def tag_set(classes: Sequence[str]) -> list[str]:
    return ["O"] + [f"{p}-{c}" for c in classes for p in PREFIXES]


def read_class_list(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        classes = [line.strip() for line in fh if line.strip()]
    if len(set(classes)) != len(classes):
        raise DataError(f"{path}: duplicate class names")
    return classes


def _check_spans(n_tokens: int, spans: Sequence[EntitySpan]) -> list[EntitySpan]:
    spans = sorted(EntitySpan(*s) for s in spans)
    for s in spans:
        if not 0 <= s.start < s.end <= n_tokens:
            raise ValueError(f"span {tuple(s)} out of range for {n_tokens} tokens")
    for a, b in zip(spans, spans[1:]):
        if b.start < a.end:
            raise ValueError(f"spans {tuple(a)} and {tuple(b)} overlap")
    return spans


def encode_bilou(n_tokens: int, spans: Sequence[EntitySpan]) -> list[str]:
    tags = ["O"] * n_tokens
    for start, end, cls in _check_spans(n_tokens, spans):
        if end - start == 1:
            tags[start] = f"U-{cls}"
            continue
        tags[start] = f"B-{cls}"
        for i in range(start + 1, end - 1):
            tags[i] = f"I-{cls}"
        tags[end - 1] = f"L-{cls}"
    return tags


def _parse_tag(tag: str, classes) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, sep, cls = tag.partition("-")
    if not sep or prefix not in PREFIXES or not cls:
        raise ValueError(f"unknown tag {tag!r}")
    if classes is not None and cls not in classes:
        raise ValueError(f"tag {tag!r} has an unconfigured class")
    return prefix, cls


def decode_bilou(tags: Sequence[str], classes: Sequence[str] | None = None) -> list[EntitySpan]:
    """Spans from a tag sequence, repairing invalid transitions.

    I or L without an open span of the same class opens one at that token;
    a class change closes the open span; an unterminated B/I run closes at
    its last contiguous same-class tag.
    """
    allowed = None if classes is None else set(classes)
    spans: list[EntitySpan] = []
    open_start, open_cls = None, None

    def close(end):
        nonlocal open_start, open_cls
        if open_start is not None:
            spans.append(EntitySpan(open_start, end, open_cls))
        open_start, open_cls = None, None

    for i, tag in enumerate(tags):
        prefix, cls = _parse_tag(tag, allowed)
        continuing = open_start is not None and cls == open_cls
        if prefix == "O":
            close(i)
        elif prefix == "U":
            close(i)
            spans.append(EntitySpan(i, i + 1, cls))
        elif prefix == "B":
            close(i)
            open_start, open_cls = i, cls
        elif prefix == "I":
            if not continuing:
                close(i)
                open_start, open_cls = i, cls
        else:  # L
            if not continuing:
                close(i)
                open_start, open_cls = i, cls
            close(i + 1)
    close(len(tags))
    return spans


def entity_f1(pred_spans: Sequence[Sequence[EntitySpan]],
              gold_spans: Sequence[Sequence[EntitySpan]]) -> tuple[float, float, float]:
    """Micro precision, recall and F1 over exact ``(start, end, class)`` matches.

    Both arguments hold one span list per sentence.
    """
    if len(pred_spans) != len(gold_spans):
        raise ValueError("prediction and gold corpora differ in sentence count")
    tp = n_pred = n_gold = 0
    for pred, gold in zip(pred_spans, gold_spans):
        p, g = {tuple(s) for s in pred}, {tuple(s) for s in gold}
        tp += len(p & g)
        n_pred += len(p)
        n_gold += len(g)
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


# -- token features -------------------------------------------------------------

def shape_features(token: str) -> np.ndarray:
    """``[is_digit, capitalized, length bucket one-hot (4)]`` on the raw token."""
    out = np.zeros(N_SHAPE)
    out[0] = float(token.isdigit())
    out[1] = float(token[:1].isupper())
    out[2 + int(np.searchsorted(LENGTH_BUCKETS, len(token)))] = 1.0
    return out


class TokenFeaturizer(BaseEstimator):
    """Window of unigram LSA token vectors plus shape features.

    Parameters
    ----------
    n_components : int, default=50
    window : int, default=2
        Tokens on each side; positions past a sentence boundary contribute
        zero vectors.
    """

    def __init__(self, n_components=50, window=2):
        self.n_components = n_components
        self.window = window

    def fit(self, sentences: Sequence[Sequence[str]], y=None):
        if self.window < 0:
            raise ValueError("window must be >= 0")
        docs = [[t.lower() for t in s] for s in sentences]
        if not any(docs):
            raise DataError("no tokens to fit token vectors on")
        self.lsa_ = LatentSemanticAnalysis(self.n_components, n_max=1).fit(docs)
        self.dim_ = self.lsa_.n_components_
        self.n_features_out_ = (2 * self.window + 1) * self.dim_ + N_SHAPE
        return self

    def token_vectors(self, tokens: Sequence[str]) -> np.ndarray:
        check_is_fitted(self, "lsa_")
        if len(tokens) == 0:
            return np.zeros((0, self.dim_))
        return self.lsa_.transform_terms([t.lower() for t in tokens])

    def sentence_features(self, tokens: Sequence[str]) -> np.ndarray:
        """One feature row per token."""
        check_is_fitted(self, "lsa_")
        n, w = len(tokens), self.window
        padded = np.zeros((n + 2 * w, self.dim_))
        padded[w:w + n] = self.token_vectors(tokens)
        out = np.zeros((n, self.n_features_out_))
        for i in range(n):
            out[i, : (2 * w + 1) * self.dim_] = padded[i:i + 2 * w + 1].ravel()
            out[i, (2 * w + 1) * self.dim_:] = shape_features(tokens[i])
        return out

    def token_features(self, tokens: Sequence[str], position: int) -> np.ndarray:
        if not 0 <= position < len(tokens):
            raise IndexError(f"position {position} outside a {len(tokens)}-token sentence")
        return self.sentence_features(tokens)[position]


# -- tagger ------------------------------------------------------------------------

class NerTagger(BaseEstimator):
    """Per-token softmax classifier over BILOU tags followed by repaired decoding.

    Parameters
    ----------
    classes : list of str, optional
        Entity classes; defaults to 16 generic names.
    n_components, window : token feature settings
    arch, hidden : head architecture
    lr : float, default=5e-5
    epochs : int, default=5
    warmup_fraction : float, default=0.02
    weight_decay, batch_size, random_state : training settings
    """

    def __init__(self, classes=None, n_components=50, window=2, arch="mlp", hidden=64, lr=5e-5,
                 epochs=5, warmup_fraction=0.02, weight_decay=0.01, batch_size=16, random_state=42):
        self.classes = classes
        self.n_components = n_components
        self.window = window
        self.arch = arch
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.warmup_fraction = warmup_fraction
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.random_state = random_state

    def _features(self, sentences) -> np.ndarray:
        rows = [self.featurizer_.sentence_features(s) for s in sentences if len(s)]
        return np.vstack(rows) if rows else np.zeros((0, self.featurizer_.n_features_out_))

    def fit(self, sentences: Sequence[Sequence[str]], tags: Sequence[Sequence[str]]):
        if len(sentences) == 0 or len(sentences) != len(tags):
            raise DataError("need a nonempty dataset with one tag sequence per sentence")
        self.classes_ = list(self.classes) if self.classes is not None else default_classes()
        self.tags_ = tag_set(self.classes_)
        tag_index = {t: i for i, t in enumerate(self.tags_)}
        y = []
        for toks, seq in zip(sentences, tags):
            if len(toks) != len(seq):
                raise DataError("sentence and tag sequence differ in length")
            for t in seq:
                if t not in tag_index:
                    raise DataError(f"tag {t!r} outside the configured class set")
                y.append(tag_index[t])
        self.featurizer_ = TokenFeaturizer(self.n_components, self.window).fit(sentences)
        # every tag keeps a logit even when absent from the training data
        self.head_ = DenseClassifier(arch=self.arch, hidden=self.hidden, lr=self.lr,
                                     epochs=self.epochs, warmup_fraction=self.warmup_fraction,
                                     weight_decay=self.weight_decay, batch_size=self.batch_size,
                                     random_state=self.random_state)
        self.head_.fit(self._features(sentences), np.array(y), classes=np.arange(len(self.tags_)))
        return self

    def predict_tags(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]:
        check_is_fitted(self, "head_")
        X = self._features(sentences)
        flat = self.head_.predict(X) if len(X) else np.zeros(0, dtype=int)
        out, pos = [], 0
        for s in sentences:
            out.append([self.tags_[i] for i in flat[pos:pos + len(s)]])
            pos += len(s)
        return out

    def predict_spans(self, sentences) -> list[list[EntitySpan]]:
        return [decode_bilou(t, self.classes_) for t in self.predict_tags(sentences)]

    def evaluate(self, sentences, tags) -> dict:
        gold = [decode_bilou(t, self.classes_) for t in tags]
        p, r, f = entity_f1(self.predict_spans(sentences), gold)
        return {"precision": p, "recall": r, "f1": f}


# -- file format ---------------------------------------------------------------------

def read_ner_jsonl(path: str | Path) -> tuple[list[list[str]], list[list[str]]]:
    sentences, tags = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                toks, seq = row["tokens"], row["tags"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed NER record ({exc})") from None
            if len(toks) != len(seq):
                raise DataError(f"{path}:{lineno}: tokens and tags differ in length")
            sentences.append(list(toks))
            tags.append(list(seq))
    return sentences, tags


def write_ner_jsonl(path: str | Path, sentences, tags) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for toks, seq in zip(sentences, tags):
            fh.write(json.dumps({"tokens": list(toks), "tags": list(seq)}, ensure_ascii=False) + "\n")
