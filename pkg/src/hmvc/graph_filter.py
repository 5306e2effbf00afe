"""Normalized adjacency, Laplacian and k-order low-pass filtering of features.

The filter response is ``1 - lambda / 2`` on the spectrum of the symmetric
normalized Laplacian, whose largest eigenvalue is at most 2, so the filtered
features are ``H = (I - L/2)^k X``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dataset import SparseAdjacency
from .errors import DimensionMismatch, IsolatedNode, ZeroSignal

SYMMETRIC = "symmetric"
ROW_STOCHASTIC = "row_stochastic"


def _as_matrix(A):
    if isinstance(A, SparseAdjacency):
        return A.edges
    if sp.issparse(A):
        return sp.csr_matrix(A, dtype=np.float64)
    return np.asarray(A, dtype=np.float64)


@dataclass(frozen=True)
class NormalizedGraph:
    matrix: object  # ndarray or scipy sparse matrix
    mode: str = SYMMETRIC
    self_loops: bool = True

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Laplacian:
    matrix: object
    source: NormalizedGraph | None = None

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FilteredFeatures:
    matrix: np.ndarray
    filter_order: int

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def normalize_adjacency(A_tilde, add_self_loops: bool = True) -> NormalizedGraph:
    """Return ``D^{-1/2} (A + I) D^{-1/2}`` (degrees taken after adding loops).

    Accepts a :class:`SparseAdjacency`, a scipy sparse matrix or a dense
    array; sparse input stays sparse.
    """
    A = _as_matrix(A_tilde)
    n = A.shape[0]
    if add_self_loops:
        A = A + (sp.identity(n, format="csr") if sp.issparse(A) else np.eye(n))
    deg = np.asarray(A.sum(axis=1)).ravel()
    if np.any(deg <= 0):
        raise IsolatedNode(f"{int(np.sum(deg <= 0))} node(s) with zero degree")
    s = 1.0 / np.sqrt(deg)
    if sp.issparse(A):
        D = sp.diags(s)
        M = sp.csr_matrix(D @ A @ D)
    else:
        M = A * s[:, None] * s[None, :]
    return NormalizedGraph(M, SYMMETRIC, add_self_loops)


def laplacian(A: NormalizedGraph) -> Laplacian:
    """``L = I - A`` for a symmetric-normalized graph."""
    if A.mode != SYMMETRIC:
        raise ValueError("laplacian needs a symmetric-normalized graph")
    M = A.matrix
    n = M.shape[0]
    L = sp.csr_matrix(sp.identity(n, format="csr") - M) if sp.issparse(M) else np.eye(n) - M
    return Laplacian(L, A)


def filter_features(X, L: Laplacian, k: int) -> FilteredFeatures:
    """Apply ``(I - L/2)^k`` to ``X`` by ``k`` successive products."""
    if k < 0:
        raise ValueError("filter order must be >= 0")
    H = np.array(X, dtype=np.float64, copy=True)
    if H.ndim == 1:
        H = H[:, None]
    Lm = L.matrix if isinstance(L, Laplacian) else L
    if Lm.shape[0] != H.shape[0]:
        raise DimensionMismatch(f"graph has {Lm.shape[0]} nodes, features have {H.shape[0]} rows")
    for _ in range(k):
        H = H - 0.5 * np.asarray(Lm @ H)
    if not np.all(np.isfinite(H)):
        raise FloatingPointError("filtered features are not finite")
    return FilteredFeatures(H, k)


def smooth_with_operator(X, A_op, k: int) -> np.ndarray:
    """``((I + A)/2)^k X`` for any operator supporting ``A @ Y``.

    Identical to :func:`filter_features` with ``L = I - A``; used with the
    implicit cosine graph so the dense ``N x N`` matrix is never formed.
    """
    H = np.array(X, dtype=np.float64, copy=True)
    for _ in range(k):
        H = 0.5 * (H + np.asarray(A_op @ H))
    return H


def smoothness(signal, L: Laplacian) -> float:
    """Rayleigh quotient ``u' L u / u' u``; equals the eigenvalue for an eigenvector."""
    u = np.asarray(signal, dtype=np.float64).ravel()
    denom = float(u @ u)
    if denom == 0.0:
        raise ZeroSignal("smoothness of the zero signal is undefined")
    Lm = L.matrix if isinstance(L, Laplacian) else L
    return float(u @ np.asarray(Lm @ u).ravel()) / denom
