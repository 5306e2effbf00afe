"""First-order cosine similarity graphs, their powers and the infinity-order limit.

A normalized first-order graph ``W`` has spectrum in ``[-1, 1]`` with at
least one eigenvalue equal to 1. Its powers ``W^n`` therefore converge
(away from eigenvalue -1) to the projector onto the unit eigenspace,
``sum_j u_j u_j'``, which is what :func:`infinity_graph` computes directly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IsolatedNode, NoUnitEigenvalue, ZeroRowWarning

INF = math.inf
SYMMETRIC = "symmetric"
ROW_STOCHASTIC = "row_stochastic"
_MODES = {"sym": SYMMETRIC, "symmetric": SYMMETRIC, "rw": ROW_STOCHASTIC,
          "row_stochastic": ROW_STOCHASTIC}


def parse_order(value) -> float | int:
    """``3`` / ``"3"`` -> 3, ``"inf"`` / ``math.inf`` -> INF."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        value = int(value)
    if value == INF:
        return INF
    if int(value) != value or value < 1:
        raise ValueError(f"order must be a positive integer or inf, got {value!r}")
    return int(value)


def parse_mode(mode: str) -> str:
    try:
        return _MODES[mode]
    except KeyError:
        raise ValueError(f"unknown normalization {mode!r}") from None


@dataclass(frozen=True)
class SimilarityGraph:
    matrix: np.ndarray
    order: float | int = 1
    normalization: str | None = None
    rank: int | None = None
    zero_rows: tuple = ()

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MixedHighOrderGraph:
    matrix: np.ndarray
    terms: tuple
    rank_r: int | None = None

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _mat(W) -> np.ndarray:
    return W.matrix if isinstance(W, SimilarityGraph) else np.asarray(W, dtype=np.float64)


def _unit_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(X, axis=1)
    zero = norms == 0
    Xn = X / np.where(zero, 1.0, norms)[:, None]
    return Xn, np.flatnonzero(zero)


def cosine_similarity_graph(X) -> SimilarityGraph:
    """Unnormalized first-order graph with entries ``cos(x_i, x_j)/2 + 1/2``.

    The diagonal is exactly 0. Rows of zero norm get cosine 0 (entry 1/2)
    against every other row and are reported through ``zero_rows`` and a
    :class:`ZeroRowWarning`.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an N x d matrix with N >= 2")
    Xn, zero = _unit_rows(X)
    if len(zero):
        warnings.warn(f"{len(zero)} zero-norm row(s); cosine taken as 0", ZeroRowWarning,
                      stacklevel=2)
    C = np.clip(Xn @ Xn.T, -1.0, 1.0)
    W = 0.5 * C + 0.5
    np.fill_diagonal(W, 0.0)
    return SimilarityGraph(W, 1, None, zero_rows=tuple(int(i) for i in zero))


def normalize_similarity(W_raw, mode: str = SYMMETRIC) -> SimilarityGraph:
    """Symmetric ``D^{-1/2} W D^{-1/2}`` or row-stochastic ``D^{-1} W``."""
    mode = parse_mode(mode)
    W = _mat(W_raw)
    if np.any(W < 0):
        raise ValueError("similarity graph must be nonnegative")
    deg = W.sum(axis=1)
    if np.any(deg <= 0):
        raise IsolatedNode(f"{int(np.sum(deg <= 0))} node(s) with zero similarity mass")
    if mode == SYMMETRIC:
        s = 1.0 / np.sqrt(deg)
        M = W * s[:, None] * s[None, :]
        M = 0.5 * (M + M.T)
    else:
        M = W / deg[:, None]
    zero_rows = W_raw.zero_rows if isinstance(W_raw, SimilarityGraph) else ()
    return SimilarityGraph(M, 1, mode, zero_rows=zero_rows)


def first_order_graph(X, mode: str = SYMMETRIC) -> SimilarityGraph:
    """Cosine graph of ``X`` followed by normalization."""
    return normalize_similarity(cosine_similarity_graph(X), mode)


def power_graph(W1, n: int) -> SimilarityGraph:
    """``W1^n`` by repeated right-multiplication with ``W1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    W = _mat(W1)
    P = W.copy()
    for _ in range(n - 1):
        P = P @ W
    mode = W1.normalization if isinstance(W1, SimilarityGraph) else None
    if mode == SYMMETRIC:
        P = 0.5 * (P + P.T)
    return SimilarityGraph(P, n, mode)


def unit_eigenvectors(W1, unit_eigenvalue_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspace with eigenvalue ~ 1."""
    if isinstance(W1, SimilarityGraph) and W1.normalization not in (SYMMETRIC, None):
        raise ValueError("infinity-order graph needs the symmetric normalization")
    W = _mat(W1)
    lam, U = np.linalg.eigh(0.5 * (W + W.T))
    sel = lam > 1.0 - unit_eigenvalue_tol
    if not sel.any():
        raise NoUnitEigenvalue(
            f"largest eigenvalue {lam[-1]:.12g} is not within {unit_eigenvalue_tol:g} of 1"
        )
    return U[:, sel]


def infinity_graph(W1, unit_eigenvalue_tol: float = 1e-8) -> SimilarityGraph:
    """Limit of ``W1^n``: the projector ``sum_j u_j u_j'`` over unit eigenvalues."""
    U = unit_eigenvectors(W1, unit_eigenvalue_tol)
    M = U @ U.T
    M = 0.5 * (M + M.T)
    return SimilarityGraph(M, INF, SYMMETRIC, rank=U.shape[1])


def mixed_graph(W1, n, unit_eigenvalue_tol: float = 1e-8) -> MixedHighOrderGraph:
    """``W^1 + ... + W^n`` for finite ``n``; ``W^1 + W^inf`` for ``n = INF``."""
    n = parse_order(n)
    W = _mat(W1)
    if n == INF:
        Winf = infinity_graph(W1, unit_eigenvalue_tol)
        return MixedHighOrderGraph(W + Winf.matrix, (1, INF), Winf.rank)
    acc = W.copy()
    P = W
    for _ in range(n - 1):
        P = P @ W
        acc += P
    if isinstance(W1, SimilarityGraph) and W1.normalization == SYMMETRIC:
        acc = 0.5 * (acc + acc.T)
    return MixedHighOrderGraph(acc, tuple(range(1, n + 1)))


@dataclass(frozen=True)
class ChangeRates:
    orders: tuple  # order n of each rate, comparing W^n with W^(n-1); INF compares with W^n_max
    rates: np.ndarray
    skipped: tuple


def _rate(new: np.ndarray, old: np.ndarray, floor: float = 1e-12) -> tuple[float, int]:
    keep = np.abs(old) >= floor
    skipped = int(keep.size - keep.sum())
    if not keep.any():
        return 0.0, skipped
    return float(np.mean(np.abs(new[keep] - old[keep]) / np.abs(old[keep]))), skipped


def order_change_rate(W1, n_max: int, unit_eigenvalue_tol: float = 1e-8) -> ChangeRates:
    """Mean relative entrywise change between consecutive orders.

    Rates are reported for ``n = 2..n_max`` and finally for the jump from
    ``W^n_max`` to the infinity-order graph. Entries whose previous value is
    below 1e-12 in magnitude are skipped and counted.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    W = _mat(W1)
    prev = W
    orders, rates, skipped = [], [], []
    for n in range(2, n_max + 1):
        cur = prev @ W
        r, s = _rate(cur, prev)
        orders.append(n)
        rates.append(r)
        skipped.append(s)
        prev = cur
    Winf = infinity_graph(W1, unit_eigenvalue_tol).matrix
    r, s = _rate(Winf, prev)
    orders.append(INF)
    rates.append(r)
    skipped.append(s)
    return ChangeRates(tuple(orders), np.asarray(rates), tuple(skipped))


class ImplicitCosineGraph:
    """Symmetric-normalized cosine graph applied without forming ``N x N``.

    ``W~ = (Xn Xn' + 1 1')/2 - diag`` where ``Xn`` holds unit-norm rows, so
    ``W~ @ Y`` costs ``O(N d m)`` for ``Y`` of shape ``(N, m)``. Supports
    ``@``, :meth:`rows` and :meth:`toarray`; the operator is symmetric.
    """

    def __init__(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ValueError("need an N x d matrix with N >= 2")
        self.Xn, zero = _unit_rows(X)
        self.zero_rows = tuple(int(i) for i in zero)
        if len(zero):
            warnings.warn(f"{len(zero)} zero-norm row(s); cosine taken as 0", ZeroRowWarning,
                          stacklevel=2)
        n = X.shape[0]
        # diagonal of (Xn Xn' + 1)/2, removed to keep W~_ii = 0
        self._diag = 0.5 * (np.einsum("ij,ij->i", self.Xn, self.Xn) + 1.0)
        deg = self._raw_matmul(np.ones((n, 1))).ravel()
        if np.any(deg <= 0):
            raise IsolatedNode("zero similarity mass")
        self.degrees = deg
        self._s = 1.0 / np.sqrt(deg)
        self.shape = (n, n)

    def _raw_matmul(self, Y: np.ndarray) -> np.ndarray:
        return 0.5 * (self.Xn @ (self.Xn.T @ Y) + Y.sum(axis=0, keepdims=True)) \
            - self._diag[:, None] * Y

    def __matmul__(self, Y):
        Y = np.asarray(Y, dtype=np.float64)
        vec = Y.ndim == 1
        Y2 = Y[:, None] if vec else Y
        out = self._s[:, None] * self._raw_matmul(self._s[:, None] * Y2)
        return out.ravel() if vec else out

    @property
    def T(self):
        return self

    def rows(self, idx) -> np.ndarray:
        """Dense rows ``idx`` of the normalized graph, shape ``(len(idx), N)``."""
        idx = np.asarray(idx, dtype=np.int64)
        C = np.clip(self.Xn[idx] @ self.Xn.T, -1.0, 1.0)
        R = 0.5 * C + 0.5
        R[np.arange(len(idx)), idx] = 0.0
        return R * self._s[idx, None] * self._s[None, :]

    def toarray(self) -> np.ndarray:
        return self.rows(np.arange(self.shape[0]))
