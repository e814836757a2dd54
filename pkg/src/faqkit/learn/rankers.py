"""Pointwise (label-smoothed) and pairwise (hinge) trainers, and a dense softmax classifier."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from faqkit.corpus import FaqCollection, RankingSample
from faqkit.exceptions import DataError
from faqkit.learn.losses import hinge_pair_batch, smoothed_ce_batch, softmax
from faqkit.learn.models import RankModel
from faqkit.learn.optim import OptimizerState, Schedule, adamw_step


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the FAQ fine-tuning recipe."""

    arch: str = "linear"
    hidden: int = 32
    lr: float = 5e-5
    epochs: int = 1
    warmup_fraction: float = 0.02
    weight_decay: float = 0.01
    batch_size: int = 16
    smoothing: float = 0.1
    margin: float = 0.2
    seed: int = 42


def _optimizer(cfg: TrainConfig) -> OptimizerState:
    return OptimizerState(weight_decay=cfg.weight_decay)


def _n_batches(n: int, batch_size: int) -> int:
    return math.ceil(n / batch_size)


def fit_softmax_head(X: np.ndarray, y_idx: np.ndarray, n_classes: int, cfg: TrainConfig,
                     meta: dict | None = None):
    """Train a ``n_classes``-way head with smoothed cross entropy; returns ``(model, trace)``."""
    n, d = X.shape
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    model = RankModel.init(cfg.arch, d, n_classes, cfg.hidden, seed=cfg.seed, meta=meta)
    trace: list[tuple[int, float, float]] = []
    if cfg.epochs == 0:
        return model, trace
    per_epoch = _n_batches(n, cfg.batch_size)
    schedule = Schedule(per_epoch * cfg.epochs, cfg.warmup_fraction, cfg.lr)
    state = _optimizer(cfg)
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits, cache = model.forward(X[idx])
            loss, dlogits = smoothed_ce_batch(logits, y_idx[idx], cfg.smoothing)
            lr = adamw_step(model.params, model.backward(cache, dlogits), state, schedule)
            trace.append((state.step, lr, loss))
    return model, trace


def _triples(y: np.ndarray, groups: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = []
    for g in np.unique(groups):
        members = np.flatnonzero(groups == g)
        pos = members[y[members] == 1]
        neg = members[y[members] == 0]
        if len(pos) == 0:
            raise DataError(f"question {g} has no positive answer")
        if len(neg) == 0:
            raise DataError(f"question {g} has no negative answer")
        chosen = rng.choice(pos, size=len(neg), replace=True)
        out.extend(zip(chosen.tolist(), neg.tolist()))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def fit_pairwise_head(X: np.ndarray, y: np.ndarray, groups: np.ndarray, cfg: TrainConfig,
                      meta: dict | None = None):
    """Train a single-score model on (positive, negative) pairs from the same question.

    Both members of a pair pass through the same parameters; gradients of the
    two passes are summed before the update.
    """
    n, d = X.shape
    if n == 0:
        raise DataError("cannot train on an empty dataset")
    model = RankModel.init(cfg.arch, d, 1, cfg.hidden, seed=cfg.seed, meta=meta)
    trace: list[tuple[int, float, float]] = []
    rng = np.random.default_rng(cfg.seed)
    triples = _triples(y, groups, rng)
    if cfg.epochs == 0:
        return model, trace
    per_epoch = _n_batches(len(triples), cfg.batch_size)
    schedule = Schedule(per_epoch * cfg.epochs, cfg.warmup_fraction, cfg.lr)
    state = _optimizer(cfg)
    for epoch in range(cfg.epochs):
        if epoch > 0:
            triples = _triples(y, groups, rng)
        triples = triples[rng.permutation(len(triples))]
        for start in range(0, len(triples), cfg.batch_size):
            batch = triples[start:start + cfg.batch_size]
            s_pos, cache_pos = model.forward(X[batch[:, 0]])
            s_neg, cache_neg = model.forward(X[batch[:, 1]])
            loss, g_pos, g_neg = hinge_pair_batch(s_pos[:, 0], s_neg[:, 0], cfg.margin)
            grads_pos = model.backward(cache_pos, g_pos[:, None])
            grads_neg = model.backward(cache_neg, g_neg[:, None])
            grads = {k: grads_pos[k] + grads_neg[k] for k in grads_pos}
            lr = adamw_step(model.params, grads, state, schedule)
            trace.append((state.step, lr, loss))
    return model, trace


def write_loss_trace(path: str | Path, trace: Sequence[tuple[int, float, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "lr", "loss"])
        for step, lr, loss in trace:
            writer.writerow([step, repr(lr), repr(loss)])


class DenseClassifier(ClassifierMixin, BaseEstimator):
    """Softmax classification head trained with AdamW and a linear warmup schedule.

    Parameters
    ----------
    arch : {"linear", "mlp"}, default="linear"
    hidden : int, default=32
        Hidden width for ``arch="mlp"``.
    lr : float, default=5e-5
        Peak learning rate.
    epochs : int, default=5
    warmup_fraction : float, default=0.02
    weight_decay : float, default=0.01
    batch_size : int, default=16
    smoothing : float, default=0.0
        Label-smoothing mass spread uniformly over the classes.
    random_state : int, default=42

    Attributes
    ----------
    classes_ : ndarray
    model_ : RankModel
    loss_trace_ : list of (step, lr, loss)
    """

    def __init__(self, arch="linear", hidden=32, lr=5e-5, epochs=5, warmup_fraction=0.02,
                 weight_decay=0.01, batch_size=16, smoothing=0.0, random_state=42):
        self.arch = arch
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.warmup_fraction = warmup_fraction
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.smoothing = smoothing
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        return TrainConfig(arch=self.arch, hidden=self.hidden, lr=self.lr, epochs=self.epochs,
                           warmup_fraction=self.warmup_fraction, weight_decay=self.weight_decay,
                           batch_size=self.batch_size, smoothing=self.smoothing,
                           seed=self.random_state)

    def _classes(self, y, classes=None):
        if classes is None:
            return np.unique(y)
        classes = np.unique(np.asarray(classes))
        if not np.isin(y, classes).all():
            raise DataError("labels outside the declared classes")
        return classes

    def fit(self, X, y, classes=None):
        """Fit the head; ``classes`` declares labels that may be absent from ``y``."""
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = self._classes(y, classes)
        y_idx = np.searchsorted(self.classes_, y)
        meta = {"classes": self.classes_.tolist()}
        self.model_, self.loss_trace_ = fit_softmax_head(X, y_idx, len(self.classes_),
                                                         self._config(), meta)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_array(X, dtype=np.float64))

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


class PointwiseRanker(DenseClassifier):
    """Binary relevance classifier; candidates are ranked by positive-class probability."""

    def __init__(self, arch="linear", hidden=32, lr=5e-5, epochs=1, warmup_fraction=0.02,
                 weight_decay=0.01, batch_size=16, smoothing=0.1, random_state=42):
        super().__init__(arch, hidden, lr, epochs, warmup_fraction, weight_decay,
                         batch_size, smoothing, random_state)

    def _classes(self, y, classes=None):
        if not set(np.unique(y)) <= {0, 1}:
            raise DataError("pointwise labels must be 0/1")
        return np.array([0, 1])

    def fit(self, X, y, groups=None):
        return super().fit(X, y)

    def rank_scores(self, X):
        """Positive-minus-negative logit: monotone in the softmax positive probability."""
        logits = self.decision_function(X)
        return logits[:, 1] - logits[:, 0]


class PairwiseRanker(BaseEstimator):
    """Single-score model trained with a margin hinge on (positive, negative) pairs.

    Parameters mirror :class:`DenseClassifier`; ``margin`` (default 0.2) is
    the hinge margin.
    """

    def __init__(self, arch="linear", hidden=32, lr=5e-5, epochs=1, warmup_fraction=0.02,
                 weight_decay=0.01, batch_size=16, margin=0.2, random_state=42):
        self.arch = arch
        self.hidden = hidden
        self.lr = lr
        self.epochs = epochs
        self.warmup_fraction = warmup_fraction
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.margin = margin
        self.random_state = random_state

    def fit(self, X, y, groups):
        X, y = check_X_y(X, y, dtype=np.float64)
        groups = np.asarray(groups)
        if len(groups) != len(y):
            raise ValueError("groups must align with y")
        cfg = TrainConfig(arch=self.arch, hidden=self.hidden, lr=self.lr, epochs=self.epochs,
                          warmup_fraction=self.warmup_fraction, weight_decay=self.weight_decay,
                          batch_size=self.batch_size, margin=self.margin, seed=self.random_state)
        self.model_, self.loss_trace_ = fit_pairwise_head(X, y.astype(np.int64), groups, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_array(X, dtype=np.float64))[:, 0]

    def rank_scores(self, X):
        return self.decision_function(X)


# -- FAQ-level helpers ---------------------------------------------------------

def faq_features(faq: FaqCollection, samples: Sequence[RankingSample], featurizer):
    """Featurize samples question by question; returns ``(X, y, groups)``."""
    if len(samples) == 0:
        raise DataError("no samples to featurize")
    by_q: dict[int, list[int]] = {}
    for i, s in enumerate(samples):
        by_q.setdefault(s.q_id, []).append(i)
    X = np.zeros((len(samples), featurizer.n_features_out_))
    for q_id, idx in by_q.items():
        answers = [faq.answers[samples[i].doc_id] for i in idx]
        X[idx] = featurizer.featurize(faq.questions[q_id], answers)
    y = np.array([s.label for s in samples], dtype=np.int64)
    groups = np.array([s.q_id for s in samples], dtype=np.int64)
    return X, y, groups


def _meta(cfg: TrainConfig, mode: str) -> dict:
    return {"task": "faq", "mode": mode, "config": asdict(cfg)}


def train_pointwise(faq: FaqCollection, samples: Sequence[RankingSample], featurizer,
                    config: TrainConfig = TrainConfig()):
    """Train a 2-logit relevance head with label smoothing; returns ``(model, trace)``."""
    X, y, _ = faq_features(faq, samples, featurizer)
    return fit_softmax_head(X, y, 2, config, _meta(config, "pointwise"))


def train_pairwise(faq: FaqCollection, samples: Sequence[RankingSample], featurizer,
                   config: TrainConfig = TrainConfig()):
    """Train a single-score head with the pairwise hinge; returns ``(model, trace)``."""
    X, y, groups = faq_features(faq, samples, featurizer)
    return fit_pairwise_head(X, y, groups, config, _meta(config, "pairwise"))
