"""Multi-view data containers, file readers/writers and synthetic generators.

On-disk formats
---------------
* Dense views: CSV (RFC-4180, numeric, no header unless ``header=True``) or
  ``.npy`` files holding a 2-D little-endian float64 array.
* Graphs: whitespace edge lists with lines ``i j [w]`` over node ids
  ``0..N-1`` (``#`` starts a comment; missing weights are 1), or scipy
  ``.npz`` sparse matrices.
* Labels: one integer per line.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    AsymmetricWeights,
    DegenerateDistances,
    DimensionMismatch,
    EmptyView,
    InvalidLabels,
    NodeIdOutOfRange,
    NonNumericEntry,
    RowCountMismatch,
)

SYMMETRY_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense ``N x d`` feature matrix of one view."""

    data: np.ndarray
    view_id: int = 0

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise DimensionMismatch(f"view {self.view_id}: expected a 2-D matrix, got {data.ndim}-D")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise EmptyView(f"view {self.view_id} has shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonNumericEntry(f"view {self.view_id} contains NaN or Inf")
        object.__setattr__(self, "data", _frozen(data))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def zero_rows(self) -> np.ndarray:
        """Indices of all-zero rows (their cosine similarity is undefined)."""
        return np.flatnonzero(~self.data.any(axis=1))


@dataclass(frozen=True)
class SparseAdjacency:
    """Symmetric nonnegative sparse ``N x N`` adjacency."""

    edges: sp.csr_matrix
    self_loops_added: bool = False

    def __post_init__(self):
        A = sp.csr_matrix(self.edges, dtype=np.float64, copy=True)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"adjacency must be square, got {A.shape}")
        A.eliminate_zeros()
        A.sort_indices()
        if A.nnz and (not np.all(np.isfinite(A.data))):
            raise NonNumericEntry("adjacency contains NaN or Inf")
        if A.nnz and A.data.min() < 0:
            raise ValueError("adjacency weights must be nonnegative")
        asym = abs(A - A.T)
        if asym.nnz and asym.max() > SYMMETRY_TOL:
            raise AsymmetricWeights(f"adjacency asymmetric by {asym.max():.3g}")
        object.__setattr__(self, "edges", A)

    @property
    def n_nodes(self) -> int:
        return self.edges.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.edges.shape

    def toarray(self) -> np.ndarray:
        return self.edges.toarray()


@dataclass(frozen=True)
class MultiViewDataset:
    """Per-view features, optional per-view (or one shared) graph, optional labels.

    ``adjacencies`` may hold one graph per view or a single graph shared by
    all views; :attr:`shared_graph` records which.
    """

    views: tuple
    adjacencies: tuple | None = None
    labels: np.ndarray | None = None
    n_clusters: int | None = None
    name: str = "dataset"
    shared_graph: bool = field(init=False, default=False)

    def __post_init__(self):
        views = tuple(
            v if isinstance(v, FeatureMatrix) else FeatureMatrix(v, view_id=i)
            for i, v in enumerate(self.views)
        )
        if not views:
            raise EmptyView("dataset needs at least one view")
        n = views[0].shape[0]
        for v in views[1:]:
            if v.shape[0] != n:
                raise RowCountMismatch(
                    f"view {v.view_id} has {v.shape[0]} rows, view 0 has {n}"
                )
        object.__setattr__(self, "views", views)

        if self.adjacencies is not None:
            adj = tuple(
                a if isinstance(a, SparseAdjacency) else SparseAdjacency(a)
                for a in self.adjacencies
            )
            if not adj:
                adj = None
            else:
                for a in adj:
                    if a.n_nodes != n:
                        raise RowCountMismatch(f"graph has {a.n_nodes} nodes, views have {n} rows")
                if len(adj) not in (1, len(views)):
                    raise ValueError(
                        f"{len(adj)} graphs for {len(views)} views; need one per view or one shared"
                    )
                object.__setattr__(self, "shared_graph", len(adj) == 1 and len(views) > 1)
            object.__setattr__(self, "adjacencies", adj)

        c = self.n_clusters
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (n,):
                raise InvalidLabels(f"labels have shape {y.shape}, expected ({n},)")
            if not np.issubdtype(y.dtype, np.integer):
                if not np.all(np.equal(np.mod(y, 1), 0)):
                    raise InvalidLabels("labels must be integers")
            y = y.astype(np.int64)
            present = np.unique(y)
            if c is None:
                c = len(present)
            if y.min() < 0 or y.max() >= c or len(present) != c:
                raise InvalidLabels(f"labels must occupy every value of 0..{c - 1}")
            object.__setattr__(self, "labels", _frozen(y.copy()))
        if c is None:
            raise ValueError("n_clusters is required when labels are absent")
        if int(c) < 1:
            raise ValueError("n_clusters must be positive")
        object.__setattr__(self, "n_clusters", int(c))

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def has_graphs(self) -> bool:
        return self.adjacencies is not None

    def adjacency(self, v: int) -> SparseAdjacency:
        """Graph used by view ``v`` (the shared one when only one is stored)."""
        if self.adjacencies is None:
            raise ValueError("dataset has no graphs")
        return self.adjacencies[0] if len(self.adjacencies) == 1 else self.adjacencies[v]

    def arrays(self) -> list[np.ndarray]:
        return [v.data for v in self.views]


# --------------------------------------------------------------------------
# file IO

def _fmt_of(path: Path, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    return "npy" if path.suffix.lower() == ".npy" else "csv"


def read_matrix(path, fmt: str = "auto", header: bool = False) -> np.ndarray:
    """Read a dense numeric matrix from CSV or ``.npy``."""
    path = Path(path)
    fmt = _fmt_of(path, fmt)
    if fmt == "npy":
        arr = np.load(path, allow_pickle=False)
        if not np.issubdtype(arr.dtype, np.number):
            raise NonNumericEntry(f"{path}: dtype {arr.dtype} is not numeric")
        arr = np.asarray(arr, dtype=np.float64)
    elif fmt == "csv":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # numpy warns on empty input
            try:
                arr = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0,
                                 ndmin=2, dtype=np.float64, quotechar='"')
            except ValueError as exc:
                raise NonNumericEntry(f"{path}: {exc}") from None
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.size == 0:
        raise EmptyView(f"{path} holds no data")
    if not np.all(np.isfinite(arr)):
        raise NonNumericEntry(f"{path} contains NaN or Inf")
    return arr


def write_matrix(path, arr, fmt: str = "auto") -> None:
    path = Path(path)
    arr = np.asarray(arr, dtype=np.float64)
    if _fmt_of(path, fmt) == "npy":
        np.save(path, np.ascontiguousarray(arr, dtype="<f8"), allow_pickle=False)
    else:
        np.savetxt(path, np.atleast_2d(arr), delimiter=",", fmt="%.17g")


def _dedupe_max(rows, cols, w, n):
    if len(w) == 0:
        return rows, cols, w
    keys = rows.astype(np.int64) * n + cols
    order = np.argsort(keys, kind="stable")
    keys, w = keys[order], w[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    w = np.maximum.reduceat(w, starts)
    keys = keys[starts]
    return keys // n, keys % n, w


def read_edge_list(path, n_nodes: int, symmetrize: bool = True) -> SparseAdjacency:
    """Read ``i j [w]`` lines (or a scipy ``.npz``) into a symmetric adjacency.

    Directed or duplicated entries are merged by taking the maximum weight of
    ``(i, j)`` and ``(j, i)``. With ``symmetrize=False`` an asymmetric input
    raises :class:`AsymmetricWeights` instead.
    """
    path = Path(path)
    if path.suffix.lower() == ".npz":
        A = sp.load_npz(path).tocoo()
        rows, cols, w = A.row, A.col, A.data.astype(np.float64)
        if A.shape != (n_nodes, n_nodes):
            raise NodeIdOutOfRange(f"{path}: matrix shape {A.shape}, expected {n_nodes} nodes")
    else:
        rows_l, cols_l, w_l = [], [], []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) not in (2, 3):
                    raise NonNumericEntry(f"{path}:{lineno}: expected 'i j [w]'")
                try:
                    i, j = int(parts[0]), int(parts[1])
                    wt = float(parts[2]) if len(parts) == 3 else 1.0
                except ValueError:
                    raise NonNumericEntry(f"{path}:{lineno}: {line!r}") from None
                if not np.isfinite(wt):
                    raise NonNumericEntry(f"{path}:{lineno}: non-finite weight")
                rows_l.append(i)
                cols_l.append(j)
                w_l.append(wt)
        rows = np.asarray(rows_l, dtype=np.int64)
        cols = np.asarray(cols_l, dtype=np.int64)
        w = np.asarray(w_l, dtype=np.float64)
    if len(rows):
        bad = (rows < 0) | (rows >= n_nodes) | (cols < 0) | (cols >= n_nodes)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise NodeIdOutOfRange(
                f"{path}: edge ({rows[k]}, {cols[k]}) outside 0..{n_nodes - 1}"
            )
    if symmetrize:
        rows, cols, w = np.r_[rows, cols], np.r_[cols, rows], np.r_[w, w]
    rows, cols, w = _dedupe_max(rows, cols, w, n_nodes)
    A = sp.csr_matrix((w, (rows, cols)), shape=(n_nodes, n_nodes))
    return SparseAdjacency(A)


def write_edge_list(path, adjacency) -> None:
    """Write the upper triangle (including the diagonal) as ``i j w`` lines."""
    A = adjacency.edges if isinstance(adjacency, SparseAdjacency) else sp.csr_matrix(adjacency)
    T = sp.triu(A, format="coo")
    order = np.lexsort((T.col, T.row))
    with open(path, "w") as fh:
        for i, j, wt in zip(T.row[order], T.col[order], T.data[order]):
            fh.write(f"{i} {j} {wt:.17g}\n")


def read_labels(path) -> np.ndarray:
    """One integer per line; arbitrary label values are remapped to ``0..c-1``."""
    with open(path) as fh:
        toks = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        raw = np.array([int(float(t)) if float(t).is_integer() else None for t in toks])
    except ValueError:
        raise NonNumericEntry(f"{path}: labels must be integers") from None
    if any(r is None for r in raw):
        raise InvalidLabels(f"{path}: labels must be integers")
    _, y = np.unique(raw.astype(np.int64), return_inverse=True)
    return y.astype(np.int64)


def write_labels(path, labels) -> None:
    np.savetxt(path, np.asarray(labels, dtype=np.int64), fmt="%d")


def load_feature_views(paths: Sequence, fmt: str = "auto", header: bool = False,
                       labels=None, n_clusters: int | None = None,
                       name: str = "dataset") -> MultiViewDataset:
    """Load one file per view into a :class:`MultiViewDataset` without graphs.

    ``labels`` may be a path or an array.
    """
    mats = [read_matrix(p, fmt=fmt, header=header) for p in paths]
    for i, m in enumerate(mats[1:], 1):
        if m.shape[0] != mats[0].shape[0]:
            raise RowCountMismatch(
                f"{paths[i]} has {m.shape[0]} rows, {paths[0]} has {mats[0].shape[0]}"
            )
    y = read_labels(labels) if isinstance(labels, (str, Path)) else labels
    return MultiViewDataset(
        views=tuple(FeatureMatrix(m, view_id=i) for i, m in enumerate(mats)),
        labels=y, n_clusters=n_clusters, name=name,
    )


def load_attributed_graph(feature_paths, adjacency_paths: Sequence, fmt: str = "auto",
                          header: bool = False, symmetrize: bool = True, labels=None,
                          n_clusters: int | None = None,
                          name: str = "dataset") -> MultiViewDataset:
    """Load an attributed multi-graph dataset.

    ``feature_paths`` is one path or a list. A single feature matrix with
    several graphs yields one view per graph (features repeated, as for
    ACM/DBLP/IMDB); several feature views with a single graph share it
    (Amazon-style, where the extra views are supplied precomputed).
    """
    if isinstance(feature_paths, (str, Path)):
        feature_paths = [feature_paths]
    mats = [read_matrix(p, fmt=fmt, header=header) for p in feature_paths]
    n = mats[0].shape[0]
    for i, m in enumerate(mats[1:], 1):
        if m.shape[0] != n:
            raise RowCountMismatch(f"{feature_paths[i]} has {m.shape[0]} rows, expected {n}")
    graphs = [read_edge_list(p, n, symmetrize=symmetrize) for p in adjacency_paths]
    if len(mats) == 1 and len(graphs) > 1:
        mats = mats * len(graphs)
    y = read_labels(labels) if isinstance(labels, (str, Path)) else labels
    return MultiViewDataset(
        views=tuple(FeatureMatrix(m, view_id=i) for i, m in enumerate(mats)),
        adjacencies=tuple(graphs), labels=y, n_clusters=n_clusters, name=name,
    )


# --------------------------------------------------------------------------
# synthetic data

def generate_two_moons(n_points: int = 200, noise_sigma: float = 0.05,
                       seed: int = 0) -> MultiViewDataset:
    """Two interleaved unit half-circles, ``n_points // 2`` per moon.

    The upper moon is ``(cos t, sin t)``; the lower one is the reflected arc
    ``(1 - cos t, 0.5 - sin t)``, i.e. a unit circle centred at ``(1, 0.5)``.
    Gaussian noise of scale ``noise_sigma`` is added to both coordinates.
    """
    if n_points < 2 or n_points % 2:
        raise ValueError("n_points must be a positive even number")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    half = n_points // 2
    t = np.linspace(0.0, np.pi, half)
    outer = np.column_stack([np.cos(t), np.sin(t)])
    inner = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    X = np.vstack([outer, inner])
    rng = np.random.default_rng(seed)
    noise = rng.normal(scale=1.0, size=X.shape)
    if noise_sigma > 0:
        X = X + noise_sigma * noise
    y = np.repeat([0, 1], half)
    return MultiViewDataset(views=(X,), labels=y, n_clusters=2, name="two_moons")


def generate_gaussian_blobs(n_samples: int = 150, n_clusters: int = 3,
                            view_dims: Sequence[int] = (10, 10), separation: float = 4.0,
                            sigma: float = 1.0, seed: int = 0,
                            noise_dims: int = 0) -> MultiViewDataset:
    """Balanced isotropic Gaussian clusters observed through several views.

    In every view the cluster means are ``separation * sigma`` apart pairwise
    (scaled axis vectors after a random rotation) and each view draws its own
    noise. ``noise_dims`` appends pure-noise columns of the same scale.
    """
    if n_samples < n_clusters:
        raise ValueError("need at least one sample per cluster")
    rng = np.random.default_rng(seed)
    y = np.arange(n_samples) % n_clusters
    y.sort()
    views = []
    for d in view_dims:
        if d < n_clusters:
            raise ValueError("each view needs at least n_clusters dimensions")
        Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        centers = (separation * sigma / np.sqrt(2.0)) * np.eye(n_clusters, d) @ Q.T
        X = centers[y] + sigma * rng.normal(size=(n_samples, d))
        if noise_dims:
            X = np.hstack([X, sigma * rng.normal(size=(n_samples, noise_dims))])
        views.append(X)
    return MultiViewDataset(views=tuple(views), labels=y, n_clusters=n_clusters, name="blobs")


def generate_planted_graph(n_samples: int = 150, n_clusters: int = 3, n_graphs: int = 2,
                           p_in: float = 0.15, p_out: float = 0.02, feature_dim: int = 20,
                           separation: float = 2.0, sigma: float = 1.0,
                           seed: int = 0) -> MultiViewDataset:
    """Attributed multi-graph data: stochastic block model graphs over shared
    noisy Gaussian features (one view per graph)."""
    rng = np.random.default_rng(seed)
    y = np.arange(n_samples) % n_clusters
    y.sort()
    centers = (separation * sigma / np.sqrt(2.0)) * np.eye(n_clusters, feature_dim)
    X = centers[y] + sigma * rng.normal(size=(n_samples, feature_dim))
    same = y[:, None] == y[None, :]
    graphs = []
    for _ in range(n_graphs):
        P = np.where(same, p_in, p_out)
        upper = np.triu(rng.random((n_samples, n_samples)) < P, k=1)
        A = (upper | upper.T).astype(np.float64)
        graphs.append(sp.csr_matrix(A))
    return MultiViewDataset(views=(X,) * n_graphs, adjacencies=tuple(graphs), labels=y,
                            n_clusters=n_clusters, name="planted_graph")


def knn_graph(X, K: int, rule: str = "union") -> SparseAdjacency:
    """Binary symmetric K-nearest-neighbour graph (Euclidean).

    ``rule="union"`` links ``i`` and ``j`` when either is among the other's
    K nearest; ``rule="mutual"`` requires both. Exact distance ties are
    broken by lower index and reported with a :class:`DegenerateDistances`
    warning.
    """
    if rule not in ("union", "mutual"):
        raise ValueError(f"unknown rule {rule!r}")
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= K < n:
        raise ValueError(f"K must satisfy 1 <= K < N (got K={K}, N={n})")
    sq = np.einsum("ij,ij->i", X, X)
    chunk = max(1, min(n, 2 ** 22 // max(n, 1)))
    nbrs = np.empty((n, K), dtype=np.int64)
    ties = False
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        D = sq[start:stop, None] + sq[None, :] - 2.0 * X[start:stop] @ X.T
        np.maximum(D, 0.0, out=D)
        D[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(D, axis=1, kind="stable")
        nbrs[start:stop] = order[:, :K]
        if K < n - 1:
            kth = np.take_along_axis(D, order[:, K - 1:K + 1], axis=1)
            ties = ties or bool(np.any(kth[:, 0] == kth[:, 1]))
    if ties:
        warnings.warn("exact distance ties broken by lower index", DegenerateDistances, stacklevel=2)
    rows = np.repeat(np.arange(n), K)
    A = sp.csr_matrix((np.ones(n * K), (rows, nbrs.ravel())), shape=(n, n))
    A = A.maximum(A.T) if rule == "union" else A.multiply(A.T).tocsr()
    A.eliminate_zeros()
    A.data[:] = 1.0
    return SparseAdjacency(A)
