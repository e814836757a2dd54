"""Candidate ranking, retrieval metrics (MRR@K, AP@1), classification F1 and BM25+ re-ranking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from faqkit import bm25
from faqkit.corpus import FaqCollection, RankingSample, group_by_question
from faqkit.exceptions import DataError
from faqkit.learn.losses import softmax


@dataclass(frozen=True)
class RankedList:
    """Candidates of one question, most relevant first."""

    q_id: int
    doc_ids: tuple[int, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        if len(self.doc_ids) != len(self.scores):
            raise ValueError("doc_ids and scores disagree in length")
        if len(set(self.doc_ids)) != len(self.doc_ids):
            raise ValueError("duplicate doc_id in ranking")


@dataclass(frozen=True)
class EvalReport:
    mrr_at_k: float
    ap_at_1: float
    k: int
    n_queries: int

    def as_dict(self) -> dict:
        return {f"mrr@{self.k}": self.mrr_at_k, "ap@1": self.ap_at_1, "n_queries": self.n_queries}


def rank_by_scores(q_id: int, doc_ids: Sequence[int], scores, order_key=None) -> RankedList:
    """Sort by ``order_key`` (defaults to ``scores``) descending, ties by ascending doc_id."""
    doc_ids = np.asarray(doc_ids, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    key = scores if order_key is None else np.asarray(order_key, dtype=float)
    if len(doc_ids) == 0:
        raise ValueError("no candidates to rank")
    order = np.lexsort((doc_ids, -key))
    return RankedList(q_id, tuple(doc_ids[order].tolist()), tuple(scores[order].tolist()))


def model_scores(model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(scores, order_key)`` for candidate features ``X``.

    Two-output models are pointwise: the score is the positive-class softmax
    probability and the order key is the logit margin, which sorts
    identically but does not saturate. Single-output models are pairwise:
    the raw score is both.
    """
    if hasattr(model, "rank_scores"):
        margin = np.asarray(model.rank_scores(X), dtype=float)
        if hasattr(model, "predict_proba"):
            return model.predict_proba(X)[:, 1], margin
        return margin, margin
    out = np.asarray(model.predict(X), dtype=float)
    if out.shape[1] == 2:
        return softmax(out)[:, 1], out[:, 1] - out[:, 0]
    if out.shape[1] == 1:
        return out[:, 0], out[:, 0]
    raise ValueError(f"ranking models need 1 or 2 outputs, got {out.shape[1]}")


def rank_candidates(model, question: str, candidates: Sequence[tuple[int, str]], featurizer,
                    q_id: int = -1) -> RankedList:
    """Score each ``(doc_id, answer)`` candidate against ``question`` and sort."""
    if len(candidates) == 0:
        raise ValueError("no candidates to rank")
    X = featurizer.featurize(question, [text for _, text in candidates])
    scores, key = model_scores(model, X)
    return rank_by_scores(q_id, [d for d, _ in candidates], scores, key)


def reciprocal_rank(ranked: RankedList, relevant, k: int = 10) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    for pos, doc in enumerate(ranked.doc_ids[:k], start=1):
        if doc in relevant:
            return 1.0 / pos
    return 0.0


def _relevant_for(relevance, ranked: RankedList):
    try:
        return relevance[ranked.q_id]
    except KeyError:
        raise DataError(f"no relevance judgments for question {ranked.q_id}") from None


def mrr(rankings: Sequence[RankedList], relevance: Mapping[int, set], k: int = 10) -> float:
    if len(rankings) == 0:
        raise ValueError("mrr of an empty query set")
    return float(np.mean([reciprocal_rank(r, _relevant_for(relevance, r), k) for r in rankings]))


def ap_at_1(rankings: Sequence[RankedList], relevance: Mapping[int, set]) -> float:
    """Fraction of queries whose top-ranked candidate is relevant (any relevant answer counts)."""
    if len(rankings) == 0:
        raise ValueError("ap@1 of an empty query set")
    return float(np.mean([r.doc_ids[0] in _relevant_for(relevance, r) for r in rankings]))


def evaluate_rankings(rankings: Sequence[RankedList], relevance: Mapping[int, set],
                      k: int = 10) -> EvalReport:
    return EvalReport(mrr(rankings, relevance, k), ap_at_1(rankings, relevance), k, len(rankings))


def f1_report(preds, golds, classes: Sequence) -> dict:
    """Per-class precision/recall/F1 with macro and micro averages.

    Classes with no predictions (or no instances) score 0 for precision (or recall).
    """
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise ValueError("preds and golds disagree in length")
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    unknown = {x for x in preds + golds if x not in index}
    if unknown:
        raise ValueError(f"unknown class labels: {sorted(map(str, unknown))}")
    K = len(classes)
    confusion = np.zeros((K, K), dtype=np.int64)
    for p, g in zip(preds, golds):
        confusion[index[g], index[p]] += 1
    tp = np.diag(confusion).astype(float)
    n_pred = confusion.sum(axis=0)
    n_gold = confusion.sum(axis=1)

    def prf(tp, n_pred, n_gold):
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return float(p), float(r), float(f)

    per_class = {}
    for i, c in enumerate(classes):
        p, r, f = prf(tp[i], n_pred[i], n_gold[i])
        per_class[c] = {"precision": p, "recall": r, "f1": f, "support": int(n_gold[i])}
    macro = {m: float(np.mean([v[m] for v in per_class.values()])) for m in ("precision", "recall", "f1")}
    mp, mr, mf = prf(tp.sum(), n_pred.sum(), n_gold.sum())
    return {"per_class": per_class, "macro": macro,
            "micro": {"precision": mp, "recall": mr, "f1": mf}, "confusion": confusion.tolist()}


def rerank(query: str, index: bm25.InvertedIndex, params: bm25.Bm25Params, model, featurizer,
           answers: Mapping[int, str], k: int = 10) -> RankedList:
    """Take the BM25+ top-``k`` answers and reorder them by model score.

    The sort is stable, so candidates the model scores equally keep their
    BM25+ order.
    """
    q_tok = featurizer.tokens(query)
    hits = bm25.search(q_tok, index, params, k)
    if not hits:
        raise DataError("BM25+ returned no candidates")
    doc_ids = [d for d, _ in hits]
    X = featurizer.featurize(query, [answers[d] for d in doc_ids])
    scores, key = model_scores(model, X)
    order = np.argsort(-key, kind="stable")
    return RankedList(-1, tuple(doc_ids[i] for i in order), tuple(float(scores[i]) for i in order))


# -- dataset-level evaluation --------------------------------------------------

def rank_dataset(model, faq: FaqCollection, samples: Sequence[RankingSample], featurizer,
                 features: np.ndarray | None = None) -> list[RankedList]:
    """Rank each question's candidate pool in ``samples``.

    ``features`` may hold precomputed rows aligned with ``samples``.
    """
    rankings = []
    if features is not None:
        scores, key = model_scores(model, features)
        pos = {}
        for i, s in enumerate(samples):
            pos.setdefault(s.q_id, []).append(i)
        for q_id in sorted(pos):
            idx = pos[q_id]
            rankings.append(rank_by_scores(q_id, [samples[i].doc_id for i in idx],
                                           scores[idx], key[idx]))
        return rankings
    for q_id, group in sorted(group_by_question(samples).items()):
        cands = [(s.doc_id, faq.answers[s.doc_id]) for s in group]
        rankings.append(rank_candidates(model, faq.questions[q_id], cands, featurizer, q_id))
    return rankings


def bm25_rank_dataset(faq: FaqCollection, samples: Sequence[RankingSample], featurizer) -> list[RankedList]:
    """BM25+ baseline over the same candidate pools, with the featurizer's index statistics."""
    rankings = []
    for q_id, group in sorted(group_by_question(samples).items()):
        q_tok = featurizer.tokens(faq.questions[q_id])
        scores = [bm25.score_document(q_tok, featurizer.tokens(faq.answers[s.doc_id]),
                                      featurizer.index_, featurizer.bm25_params) for s in group]
        rankings.append(rank_by_scores(q_id, [s.doc_id for s in group], scores))
    return rankings


def evaluate_model(model, faq: FaqCollection, samples: Sequence[RankingSample], featurizer,
                   k: int = 10, features=None) -> EvalReport:
    return evaluate_rankings(rank_dataset(model, faq, samples, featurizer, features),
                             faq.relevant_map(), k)


def evaluate_bm25(faq: FaqCollection, samples: Sequence[RankingSample], featurizer,
                  k: int = 10) -> EvalReport:
    return evaluate_rankings(bm25_rank_dataset(faq, samples, featurizer), faq.relevant_map(), k)
