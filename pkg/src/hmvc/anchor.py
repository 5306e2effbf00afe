"""Anchor-based variant: ``N x m`` sample-to-anchor graphs instead of ``N x N``.

Anchors are the nodes of largest mixed second-order degree. The anchor rows
of ``W^n`` obey ``W^n[I] = W^{n-1}[I] W``, so they are accumulated with
``m x N`` by ``N x N`` products only, and the cosine graph itself is applied
implicitly (see :class:`hmvc.highorder.ImplicitCosineGraph`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dataset import MultiViewDataset, SparseAdjacency, knn_graph
from .errors import ConfigError, MTooLarge
from .graph_filter import filter_features, laplacian, normalize_adjacency, smooth_with_operator
from .highorder import INF, SYMMETRIC, ImplicitCosineGraph
from .learner import HmvcConfig, alternate


@dataclass(frozen=True)
class AnchorSet:
    indices: tuple
    eta: float = 2.0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError("anchor indices must be distinct")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self) -> int:
        return len(self.indices)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.indices, dtype=dtype or np.int64)


@dataclass
class AnchorGraph:
    Z_v: list  # N x m per view, columns follow the anchor order
    Z: np.ndarray
    gamma: np.ndarray
    anchors: AnchorSet
    objective_trace: list = field(default_factory=list)
    term_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _as_matrix(A):
    if isinstance(A, SparseAdjacency):
        return A.edges
    return A if sp.issparse(A) else np.asarray(A, dtype=np.float64)


def mixed_degrees(adjacencies) -> np.ndarray:
    """Diagonal of ``sum_v deg(A_v + A_v^2)``, without forming ``A_v^2``."""
    total = None
    for A in adjacencies:
        A = _as_matrix(A)
        d = np.asarray(A.sum(axis=1), dtype=np.float64).ravel()
        dv = d + np.asarray(A @ d).ravel()
        total = dv if total is None else total + dv
    if total is None:
        raise ValueError("need at least one adjacency")
    return total


def select_anchors(adjacencies, m: int, eta: float = 2.0) -> AnchorSet:
    """Greedy selection by relative importance over the not-yet-chosen nodes.

    Scores are ``deg^eta`` renormalized over the remaining nodes at every
    step; ties go to the lower node id. Because degrees are fixed, the order
    coincides with sorting by degree.
    """
    D = mixed_degrees(adjacencies)
    n = len(D)
    if m >= n:
        raise MTooLarge(f"m={m} must be smaller than N={n}")
    if m < 1:
        raise ValueError("m must be >= 1")
    if not eta > 1:
        raise ValueError("eta must be > 1")
    top = D.max()
    base = (D / top) ** eta if top > 0 else np.ones(n)
    remaining = np.ones(n, dtype=bool)
    chosen = []
    for _ in range(m):
        mass = base[remaining].sum()
        g = base / mass if mass > 0 else remaining / remaining.sum()
        p = g / g[remaining].sum()
        i = int(np.argmax(np.where(remaining, p, -np.inf)))
        chosen.append(i)
        remaining[i] = False
    return AnchorSet(tuple(chosen), eta)


def anchor_highorder(anchor_rows, W1, n: int, mixed: bool = False) -> np.ndarray:
    """Rows ``Inds`` of ``W1^n`` (or of ``W1 + ... + W1^n`` when ``mixed``).

    ``anchor_rows`` is the ``m x N`` slice ``W1[Inds]``; ``W1`` may be a dense
    array or any operator with ``.T`` and ``@``.
    """
    if n == INF:
        raise ConfigError("infinity order needs a full eigendecomposition; use a finite order")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    R = np.array(anchor_rows, dtype=np.float64)
    acc = R.copy()
    for _ in range(int(n) - 1):
        R = np.asarray(W1.T @ R.T).T
        acc += R
    return acc if mixed else R


def feature_anchor_graph(dataset: MultiViewDataset, K: int = 10) -> SparseAdjacency:
    """KNN graph on the concatenated row-normalized views (for data without graphs)."""
    blocks = []
    for v in dataset.views:
        X = v.data
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        blocks.append(X / np.where(norms > 0, norms, 1.0))
    return knn_graph(np.hstack(blocks), min(K, dataset.n_samples - 1))


def anchor_filtered_views(dataset: MultiViewDataset, k: int) -> list[np.ndarray]:
    """Same smoothing as the full model, with feature graphs applied implicitly."""
    H = []
    for v in range(dataset.n_views):
        X = dataset.views[v].data
        if k == 0:
            H.append(np.array(X))
        elif dataset.has_graphs:
            L = laplacian(normalize_adjacency(dataset.adjacency(v), add_self_loops=True))
            H.append(filter_features(X, L, k).matrix)
        else:
            H.append(smooth_with_operator(X, ImplicitCosineGraph(X), k))
    return H


def fit_anchor(dataset: MultiViewDataset, config: HmvcConfig | None = None, m: int = 100,
               eta: float = 2.0, anchors=None, knn_k: int = 10, callback=None) -> AnchorGraph:
    """Learn per-view and consensus ``N x m`` anchor graphs.

    ``anchors`` overrides selection with explicit node ids (``m`` is then
    ignored and may equal ``N``).
    """
    config = config or HmvcConfig()
    n = config.order_for(dataset)
    if n == INF:
        raise ConfigError("the anchor model supports finite similarity orders only")
    if config.sim_normalization != SYMMETRIC:
        raise ConfigError("the anchor model uses the symmetric normalization")

    H = anchor_filtered_views(dataset, config.filter_order)
    if anchors is None:
        graphs = dataset.adjacencies if dataset.has_graphs else [feature_anchor_graph(dataset, knn_k)]
        anchors = select_anchors(graphs, m, eta)
    elif not isinstance(anchors, AnchorSet):
        anchors = AnchorSet(tuple(anchors), eta)
    idx = np.asarray(anchors.indices)

    D, F = [], []
    for h in H:
        op = ImplicitCosineGraph(h)
        D.append(h[idx])
        F.append(anchor_highorder(op.rows(idx), op, n, mixed=True))
    state = alternate(H, F, config, D=D, callback=callback)
    return AnchorGraph(
        Z_v=[s.T for s in state.S_v], Z=state.S.T, gamma=state.gamma, anchors=anchors,
        objective_trace=state.objective_trace, term_trace=state.term_trace,
        iterations=state.iterations, converged=state.converged,
    )
