"""Turning a learned graph into labels, and external clustering metrics."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateEigenbasis, LengthMismatch

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# k-means

@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    n_repairs: int
    restart: int


def _sq_dists(P, C, p_sq):
    D = p_sq[:, None] + np.einsum("ij,ij->i", C, C)[None, :] - 2.0 * P @ C.T
    np.maximum(D, 0.0, out=D)
    return D


def _kmeans_pp(P, c, rng, p_sq):
    n = P.shape[0]
    centers = np.empty((c, P.shape[1]))
    centers[0] = P[rng.integers(n)]
    closest = _sq_dists(P, centers[:1], p_sq).ravel()
    for j in range(1, c):
        total = closest.sum()
        idx = rng.integers(n) if total <= 0 else rng.choice(n, p=closest / total)
        centers[j] = P[idx]
        closest = np.minimum(closest, _sq_dists(P, centers[j:j + 1], p_sq).ravel())
    return centers


def _lloyd(P, c, rng, max_iter, tol, p_sq, restart):
    centers = _kmeans_pp(P, c, rng, p_sq)
    repairs = 0
    it = 0
    for it in range(1, max_iter + 1):
        D = _sq_dists(P, centers, p_sq)
        labels = np.argmin(D, axis=1)
        counts = np.bincount(labels, minlength=c)
        for j in np.flatnonzero(counts == 0):
            # move the point farthest from its centre into the empty cluster
            own = D[np.arange(len(labels)), labels]
            own[counts[labels] <= 1] = -1.0
            far = int(np.argmax(own))
            counts[labels[far]] -= 1
            labels[far] = j
            counts[j] = 1
            repairs += 1
            logger.debug("k-means restart %d: repaired empty cluster %d with point %d",
                         restart, j, far)
        new = np.zeros_like(centers)
        np.add.at(new, labels, P)
        new /= counts[:, None]
        shift = float(np.sum((new - centers) ** 2))
        centers = new
        if shift <= tol:
            break
    inertia = float(np.sum((P - centers[labels]) ** 2))
    return KMeansResult(labels, centers, inertia, it, repairs, restart)


def kmeans_fit(points, c: int, seed: int = 0, n_init: int = 50, max_iter: int = 300,
               tol: float = 1e-7, n_jobs: int = 1) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding and ``n_init`` restarts.

    Each restart gets its own child seed of ``seed``; the restart with the
    lowest inertia wins (lowest restart index on ties), so the result does
    not depend on ``n_jobs``. ``tol`` bounds the squared centre shift,
    relative to the mean per-feature variance of ``points``.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n = P.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"need 1 <= c <= N, got c={c}, N={n}")
    p_sq = np.einsum("ij,ij->i", P, P)
    scaled_tol = tol * float(np.mean(np.var(P, axis=0)))
    seeds = np.random.SeedSequence(seed).spawn(n_init)

    def run(r):
        return _lloyd(P, c, np.random.default_rng(seeds[r]), max_iter, scaled_tol, p_sq, r)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, range(n_init)))
    else:
        results = [run(r) for r in range(n_init)]
    best = min(results, key=lambda res: (res.inertia, res.restart))
    if best.n_repairs:
        logger.info("k-means: best restart needed %d empty-cluster repair(s)", best.n_repairs)
    return best


def kmeans(points, c: int, seed: int = 0, **kwargs) -> np.ndarray:
    return kmeans_fit(points, c, seed, **kwargs).labels


# --------------------------------------------------------------------------
# graph -> labels

def spectral_embedding(S, c: int) -> np.ndarray:
    """Row-normalized top-``c`` eigenvectors of the symmetric-normalized affinity."""
    A = np.asarray(S, dtype=np.float64)
    n = A.shape[0]
    if c > n:
        raise DegenerateEigenbasis(f"cannot take {c} eigenvectors of a {n}-node graph")
    A = 0.5 * (A + A.T)
    np.maximum(A, 0.0, out=A)
    deg = A.sum(axis=1)
    if not np.any(deg > 0):
        raise DegenerateEigenbasis("affinity matrix is identically zero")
    s = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    M = A * s[:, None] * s[None, :]
    _, U = scipy.linalg.eigh(M, subset_by_index=[n - c, n - 1])
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    return U / np.where(norms > 0, norms, 1.0)


def spectral_cluster(S, c: int, seed: int = 0, n_init: int = 50) -> np.ndarray:
    """Normalized spectral clustering of the affinity ``(S + S')/2`` (negatives dropped)."""
    if c < 2:
        raise ValueError("spectral clustering needs c >= 2")
    return kmeans(spectral_embedding(S, c), c, seed, n_init=n_init)


def anchor_cluster(Z, c: int, seed: int = 0, n_init: int = 50) -> np.ndarray:
    """Cluster an ``N x m`` anchor graph through its top-``c`` left singular vectors."""
    Z = np.asarray(Z, dtype=np.float64)
    if c > min(Z.shape):
        raise DegenerateEigenbasis(f"need c <= min(N, m), got c={c}, Z {Z.shape}")
    U, _, _ = np.linalg.svd(Z, full_matrices=False)
    return kmeans(U[:, :c], c, seed, n_init=n_init)


# --------------------------------------------------------------------------
# metrics

def _check(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape[0]} predictions for {truth.shape[0]} labels")
    if pred.size == 0:
        raise LengthMismatch("empty label vectors")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    """Counts ``C[k, j] = |cluster k ∩ class j|`` over the labels that occur."""
    pred, truth = _check(pred, truth)
    _, p = np.unique(pred, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    C = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(C, (p, t), 1)
    return C


def accuracy(pred, truth) -> float:
    """Fraction matched under the best one-to-one cluster/class assignment."""
    C = contingency(pred, truth)
    r, c = linear_sum_assignment(C, maximize=True)
    return float(C[r, c].sum() / C.sum())


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    C = contingency(pred, truth)
    n = C.sum()
    hp, ht = _entropy(C.sum(axis=1)), _entropy(C.sum(axis=0))
    if hp == 0.0 and ht == 0.0:
        return 1.0
    nz = C > 0
    outer = np.outer(C.sum(axis=1), C.sum(axis=0))
    mi = float(np.sum(C[nz] / n * np.log(C[nz] * n / outer[nz])))
    return float(max(0.0, mi / (0.5 * (hp + ht))))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2.0


def ari(pred, truth) -> float:
    """Adjusted Rand index (pair counting, Hubert & Arabie)."""
    C = contingency(pred, truth)
    n = C.sum()
    index = _comb2(C).sum()
    a = _comb2(C.sum(axis=1)).sum()
    b = _comb2(C.sum(axis=0)).sum()
    total = n * (n - 1) / 2.0
    expected = a * b / total if total else 0.0
    max_index = 0.5 * (a + b)
    if max_index == expected:
        # both partitions trivial in the same way
        return 1.0
    return float((index - expected) / (max_index - expected))


def f1(pred, truth) -> float:
    """Macro-F1 over classes after matching clusters to classes.

    The matching maximizes the summed per-class F1, so the score is uniquely
    defined even when several assignments tie on accuracy. Classes left
    without a cluster contribute 0.
    """
    C = contingency(pred, truth).astype(np.float64)
    size_k = C.sum(axis=1, keepdims=True)
    size_j = C.sum(axis=0, keepdims=True)
    F = np.where(C > 0, 2.0 * C / np.maximum(size_k + size_j, 1.0), 0.0)
    r, c = linear_sum_assignment(F, maximize=True)
    return float(F[r, c].sum() / C.shape[1])


def purity(pred, truth) -> float:
    C = contingency(pred, truth)
    return float(C.max(axis=1).sum() / C.sum())


@dataclass(frozen=True)
class ClusteringReport:
    labels: np.ndarray
    acc: float | None = None
    nmi: float | None = None
    ari: float | None = None
    f1: float | None = None
    pur: float | None = None
    elapsed_seconds: float = 0.0

    def metrics(self) -> dict:
        return {"acc": self.acc, "nmi": self.nmi, "ari": self.ari, "f1": self.f1,
                "pur": self.pur}


def evaluate(pred, truth=None, elapsed_seconds: float = 0.0) -> ClusteringReport:
    pred = np.asarray(pred, dtype=np.int64)
    if truth is None:
        return ClusteringReport(pred, elapsed_seconds=elapsed_seconds)
    return ClusteringReport(pred, accuracy(pred, truth), nmi(pred, truth), ari(pred, truth),
                            f1(pred, truth), purity(pred, truth), elapsed_seconds)
