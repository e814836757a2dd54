"""Label-smoothed cross entropy and the pairwise margin hinge."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def smoothed_targets(labels, n_classes: int, epsilon: float) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    t = np.full((len(labels), n_classes), epsilon / n_classes)
    t[np.arange(len(labels)), labels] += 1.0 - epsilon
    return t


def smoothed_ce_loss(logits, label, epsilon: float = 0.1):
    """Cross entropy against ``(1 - eps) * onehot + eps / K`` for one example.

    Returns ``(loss, d loss / d logits)``; ``epsilon=0`` gives plain cross entropy.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1:
        raise ValueError("expected a 1-D logit vector")
    loss, grad = smoothed_ce_batch(logits[None, :], np.array([label]), epsilon)
    return loss, grad[0]


def smoothed_ce_batch(logits: np.ndarray, labels, epsilon: float = 0.1):
    """Mean smoothed cross entropy over a batch and its gradient w.r.t. ``logits``."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    logits = np.asarray(logits, dtype=float)
    if not np.isfinite(logits).all():
        raise ValueError("non-finite logits")
    n, k = logits.shape
    target = smoothed_targets(labels, k, epsilon)
    logp = log_softmax(logits)
    loss = -(target * logp).sum() / n
    grad = (np.exp(logp) - target) / n
    return float(loss), grad


def hinge_pair_loss(s_pos: float, s_neg: float, margin: float = 0.2):
    """``max(0, margin - s_pos + s_neg)`` with its subgradient.

    Returns ``(loss, d/ds_pos, d/ds_neg)``; exactly at the boundary the hinge
    counts as inactive.
    """
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    if not (np.isfinite(s_pos) and np.isfinite(s_neg)):
        raise ValueError("non-finite scores")
    violation = margin - s_pos + s_neg
    if violation > 0:
        return float(violation), -1.0, 1.0
    return 0.0, 0.0, 0.0


def hinge_pair_batch(s_pos: np.ndarray, s_neg: np.ndarray, margin: float = 0.2):
    """Mean hinge over paired scores; returns ``(loss, grad_pos, grad_neg)``."""
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    s_pos = np.asarray(s_pos, dtype=float)
    s_neg = np.asarray(s_neg, dtype=float)
    if not (np.isfinite(s_pos).all() and np.isfinite(s_neg).all()):
        raise ValueError("non-finite scores")
    n = len(s_pos)
    violation = margin - s_pos + s_neg
    active = (violation > 0).astype(float)
    loss = float((violation * active).sum() / n)
    return loss, -active / n, active / n
