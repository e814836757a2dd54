"""Truncated SVD by one-sided Jacobi rotations, and LSA projection."""

from __future__ import annotations

import contextlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from faqkit.exceptions import DataError
from faqkit.features.tfidf import TermDocMatrix, tfidf_fit

_MAGIC = b"FQKL"
_VERSION = 1


@dataclass(frozen=True)
class LsaProjection:
    """Rank-k factors of ``T ~ U diag(sigma) V^t``.

    ``U`` is (rows x k), ``V`` is (cols x k); for a term-document matrix the
    rows are terms and the columns are documents.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def k(self) -> int:
        return len(self.sigma)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.T


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairings covering every pair once per sweep."""
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        p = np.array([players[i] for i in range(m // 2)])
        q = np.array([players[m - 1 - i] for i in range(m // 2)])
        keep = (p < n) & (q < n)
        rounds.append((p[keep], q[keep]))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_tall(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """One-sided Jacobi on ``A`` (m >= n); returns full U (m x n), sigma, V (n x n)."""
    m, n = A.shape
    # columns stored as contiguous rows
    G = np.ascontiguousarray(A.T)
    V = np.eye(n)
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            if len(p) == 0:
                continue
            gp, gq = G[p], G[q]
            alpha = np.einsum("ij,ij->i", gp, gp)
            beta = np.einsum("ij,ij->i", gq, gq)
            gamma = np.einsum("ij,ij->i", gp, gq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            p, q, gp, gq = p[active], q[active], gp[active], gq[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = (1.0 / np.hypot(1.0, t))[:, None]
            s = c * t[:, None]
            G[p], G[q] = c * gp - s * gq, s * gp + c * gq
            vp, vq = V[p], V[q]
            V[p], V[q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            break
    G, V = G.T, V.T
    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, G, V = sigma[order], G[:, order], V[:, order]
    cutoff = max(m, n) * np.finfo(float).eps * (sigma[0] if n else 0.0)
    good = sigma > cutoff
    U = np.zeros((m, n))
    U[:, good] = G[:, good] / sigma[good]
    sigma = np.where(good, sigma, 0.0)
    if not good.all():
        # complete an orthonormal basis for the null directions
        basis, _ = np.linalg.qr(np.hstack([U[:, good], np.eye(m)]))
        U[:, ~good] = basis[:, good.sum(): good.sum() + (~good).sum()]
    return U, sigma, V


def _full_svd(A: np.ndarray):
    m, n = A.shape
    if m < n:
        U, sigma, V = _full_svd(A.T)
        return V, sigma, U
    if m > n:
        Q, R = np.linalg.qr(A)
        U_r, sigma, V = _jacobi_tall(R)
        return Q @ U_r, sigma, V
    return _jacobi_tall(A)


def _fix_signs(U: np.ndarray, V: np.ndarray) -> None:
    idx = np.argmax(np.abs(U), axis=0)
    flip = U[idx, np.arange(U.shape[1])] < 0
    U[:, flip] *= -1
    V[:, flip] *= -1


def svd(T, k: int) -> LsaProjection:
    """Rank-``k`` truncated SVD of a dense matrix or a :class:`TermDocMatrix`.

    Each column of ``U`` is signed so its largest-magnitude entry is positive.
    A ``TermDocMatrix`` is decomposed in its terms x documents orientation.
    """
    if isinstance(T, TermDocMatrix):
        A = T.term_doc()
    elif sp.issparse(T):
        A = T.toarray()
    else:
        A = np.asarray(T, dtype=float)
    if A.ndim != 2:
        raise ValueError("svd expects a 2-D matrix")
    if not np.isfinite(A).all():
        raise ValueError("svd input contains non-finite values")
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k={k} out of range [1, {min(A.shape)}]")
    U, sigma, V = _full_svd(A)
    U, sigma, V = U[:, :k].copy(), sigma[:k].copy(), V[:, :k].copy()
    _fix_signs(U, V)
    return LsaProjection(U, sigma, V)


def numerical_rank(proj: LsaProjection) -> int:
    return int((proj.sigma > 0).sum())


def project(d, proj: LsaProjection) -> np.ndarray:
    """Map a term vector into the latent space: ``diag(1/sigma) U^t d``."""
    if sp.issparse(d):
        d = d.toarray().ravel()
    d = np.asarray(d, dtype=float)
    if d.shape != (proj.U.shape[0],):
        raise ValueError(f"document has dimension {d.shape}, expected ({proj.U.shape[0]},)")
    if (proj.sigma <= 0).any():
        raise ValueError("projection has a zero singular value")
    return (proj.U.T @ d) / proj.sigma


def project_rows(X, proj: LsaProjection) -> np.ndarray:
    """Project every row of a (documents x terms) matrix."""
    if (proj.sigma <= 0).any():
        raise ValueError("projection has a zero singular value")
    if X.shape[1] != proj.U.shape[0]:
        raise ValueError(f"rows have dimension {X.shape[1]}, expected {proj.U.shape[0]}")
    out = X @ proj.U
    return np.asarray(out) / proj.sigma


class LatentSemanticAnalysis(TransformerMixin, BaseEstimator):
    """TF-IDF n-grams followed by a truncated SVD of the term-document matrix.

    Parameters
    ----------
    n_components : int, default=100
        Upper bound on latent dimensions; clipped to the numerical rank.
    n_max : int, default=3
        Longest word n-gram.

    Attributes
    ----------
    tfidf_ : TermDocMatrix
    projection_ : LsaProjection
    n_components_ : int
    """

    def __init__(self, n_components=100, n_max=3):
        self.n_components = n_components
        self.n_max = n_max

    def fit(self, X, y=None):
        self.tfidf_ = tfidf_fit(list(X), self.n_max)
        k = min(self.n_components, self.tfidf_.n_terms, self.tfidf_.rows.shape[0])
        proj = svd(self.tfidf_, k)
        rank = numerical_rank(proj)
        if rank == 0:
            raise DataError("term-document matrix is all zeros; nothing to decompose")
        if rank < k:
            proj = LsaProjection(proj.U[:, :rank], proj.sigma[:rank], proj.V[:, :rank])
        self.projection_ = proj
        self.n_components_ = proj.k
        return self

    def transform(self, X):
        check_is_fitted(self, "projection_")
        return project_rows(self.tfidf_.transform(list(X)), self.projection_)

    def transform_terms(self, terms: Sequence[str]) -> np.ndarray:
        """Latent vectors of single-term documents (zeros for unseen terms)."""
        check_is_fitted(self, "projection_")
        return self.transform([[t] for t in terms])

    def save(self, path: str | Path) -> None:
        save_lsa(self, path)


@contextlib.contextmanager
def _open(target, mode):
    if hasattr(target, "read" if "r" in mode else "write"):
        yield target
    else:
        with open(target, mode) as fh:
            yield fh


def save_lsa(model: LatentSemanticAnalysis, path) -> None:
    """Binary layout: magic, version, (n_terms, k, n_docs), U, sigma, V, vocabulary JSON.

    ``path`` may also be a writable binary file object.
    """
    check_is_fitted(model, "projection_")
    proj, tfidf = model.projection_, model.tfidf_
    n_terms, k = proj.U.shape
    n_docs = proj.V.shape[0]
    meta = json.dumps({"n_max": tfidf.n_max, "n_components": model.n_components,
                       "terms": sorted(tfidf.vocabulary, key=tfidf.vocabulary.get),
                       "idf": tfidf.idf.tolist()}, ensure_ascii=False).encode("utf-8")
    with _open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIII", _VERSION, n_terms, k, n_docs))
        fh.write(np.ascontiguousarray(proj.U, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(proj.sigma, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(proj.V, dtype="<f8").tobytes())
        fh.write(struct.pack("<Q", len(meta)))
        fh.write(meta)


def load_lsa(path) -> LatentSemanticAnalysis:
    with _open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DataError(f"{path}: not an LSA model file")
        version, n_terms, k, n_docs = struct.unpack("<IIII", fh.read(16))
        if version != _VERSION:
            raise DataError(f"{path}: unsupported LSA version {version}")
        U = np.frombuffer(fh.read(8 * n_terms * k), dtype="<f8").reshape(n_terms, k)
        sigma = np.frombuffer(fh.read(8 * k), dtype="<f8")
        V = np.frombuffer(fh.read(8 * n_docs * k), dtype="<f8").reshape(n_docs, k)
        (meta_len,) = struct.unpack("<Q", fh.read(8))
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
    model = LatentSemanticAnalysis(meta["n_components"], meta["n_max"])
    vocabulary = {t: i for i, t in enumerate(meta["terms"])}
    model.tfidf_ = TermDocMatrix(vocabulary, sp.csr_matrix((0, n_terms)),
                                 np.asarray(meta["idf"], dtype=float), meta["n_max"])
    model.projection_ = LsaProjection(U.copy(), sigma.copy(), V.copy())
    model.n_components_ = k
    return model
