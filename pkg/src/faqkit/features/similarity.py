"""Cosine similarity, edit distance, exact/near-duplicate prefilter and embedding tables."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from faqkit.corpus import PreprocessOptions, preprocess
from faqkit.exceptions import DataError


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine of a zero-norm vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute edit distance."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(previous[j] + 1, current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def edit_ratio(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return levenshtein(a, b) / longest if longest else 0.0


def prefilter_match(text: str, catalog: Sequence[tuple[str, str]], max_edit_ratio: float = 0.2,
                    opts: PreprocessOptions | None = None):
    """Label of an exact or near-exact catalog entry, else ``None``.

    Texts are compared after preprocessing. Exact matches win; otherwise the
    entry with the smallest ``levenshtein / max(len)`` is used if that ratio
    is at most ``max_edit_ratio`` (first entry wins ties).
    """
    if not catalog:
        raise ValueError("empty prefilter catalog")
    key = " ".join(preprocess(text, opts))
    normalized = [(" ".join(preprocess(entry, opts)), label) for entry, label in catalog]
    for entry, label in normalized:
        if entry == key:
            return label
    best_ratio, best_label = min((edit_ratio(key, entry), i) for i, (entry, _) in enumerate(normalized))
    if best_ratio <= max_edit_ratio:
        return normalized[best_label][1]
    return None


def resolve_hierarchy(labels, priority: Sequence[str] = ("negative", "neutral", "positive")):
    """Pick the highest-priority label among those that apply.

    Negative evidence dominates by default: an interaction that also asks a
    question or thanks the agent is still labeled negative.
    """
    present = set(labels)
    for label in priority:
        if label in present:
            return label
    return None


@dataclass(frozen=True)
class EmbeddingTable:
    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or len(self.ids) != self.vectors.shape[0]:
            raise DataError("embedding ids and vectors disagree in shape")
        if not np.isfinite(self.vectors).all():
            raise DataError("embedding table contains non-finite values")
        object.__setattr__(self, "_row", {k: i for i, k in enumerate(self.ids)})

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, key: str) -> np.ndarray:
        return self.vectors[self._row[key]]

    def __contains__(self, key: str) -> bool:
        return key in self._row


def read_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a text table: header ``n dim`` then ``id v1 ... vdim`` per line (word2vec text format)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            n, dim = int(header[0]), int(header[1])
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: bad embedding header") from exc
        ids, rows = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{lineno}: expected {dim} values")
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(ids) != n:
        raise DataError(f"{path}: header says {n} rows, found {len(ids)}")
    return EmbeddingTable(tuple(ids), np.asarray(rows, dtype=float).reshape(n, dim))


def write_embeddings(path: str | Path, table: EmbeddingTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.ids)} {table.dim}\n")
        for key, vec in zip(table.ids, table.vectors):
            fh.write(key + " " + " ".join(repr(float(x)) for x in vec) + "\n")
