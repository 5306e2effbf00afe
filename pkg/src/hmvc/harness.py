"""End-to-end runs, hyperparameter grids, ablations and edge diagnostics.

A :class:`RunConfig` names a dataset, a method (``hmvc`` or ``ahmvc``), base
hyperparameters and optional sweep grids. :func:`run` executes every grid
point, records failures instead of raising, and writes ``report.csv``,
``report.json`` and per-point ``trace.csv`` plus the learned graph.
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .anchor import fit_anchor
from .clustering import ClusteringReport, anchor_cluster, evaluate, kmeans, spectral_cluster
from .dataset import (
    MultiViewDataset,
    SparseAdjacency,
    generate_gaussian_blobs,
    generate_planted_graph,
    generate_two_moons,
    knn_graph,
    load_attributed_graph,
    load_feature_views,
    write_matrix,
)
from .errors import ConfigError, HMVCError
from .graph_filter import normalize_adjacency
from .highorder import (
    INF,
    SYMMETRIC,
    MixedHighOrderGraph,
    SimilarityGraph,
    first_order_graph,
    infinity_graph,
    order_change_rate,
    parse_order,
    power_graph,
)
from .learner import HmvcConfig, fit

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("dataset", "method", "alpha", "beta", "mu", "k", "n", "m", "seed",
                  "acc", "nmi", "ari", "f1", "pur", "seconds", "iterations", "converged",
                  "status")
TRACE_TERMS = ("reconstruction", "high_order", "fusion", "regularization")
SYNTHETIC = ("blobs", "graph", "moons")


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class DatasetSpec:
    """Where the data comes from: files or a seeded synthetic generator.

    For files, ``graphs`` switches to the attributed-graph loader. Synthetic
    sources take ``n_samples``, ``n_clusters``, ``noise_dims`` and
    ``data_seed``.
    """

    source: str = "blobs"
    features: tuple = ()
    graphs: tuple = ()
    labels: str | None = None
    fmt: str = "auto"
    header: bool = False
    n_clusters: int | None = None
    n_samples: int = 150
    noise_dims: int = 0
    data_seed: int = 0
    name: str | None = None

    def load(self) -> MultiViewDataset:
        if self.source == "files":
            if not self.features:
                raise ConfigError("file datasets need at least one feature path")
            name = self.name or Path(self.features[0]).stem
            if self.graphs:
                return load_attributed_graph(list(self.features), list(self.graphs), self.fmt,
                                             self.header, labels=self.labels,
                                             n_clusters=self.n_clusters, name=name)
            return load_feature_views(list(self.features), self.fmt, self.header,
                                      labels=self.labels, n_clusters=self.n_clusters, name=name)
        c = self.n_clusters or (2 if self.source == "moons" else 3)
        if self.source == "blobs":
            ds = generate_gaussian_blobs(self.n_samples, c, seed=self.data_seed,
                                         noise_dims=self.noise_dims)
        elif self.source == "graph":
            ds = generate_planted_graph(self.n_samples, c, seed=self.data_seed)
        elif self.source == "moons":
            ds = generate_two_moons(self.n_samples, 0.05, self.data_seed)
        else:
            raise ConfigError(f"unknown dataset source {self.source!r}")
        if self.name:
            ds = dataclasses.replace(ds, name=self.name)
        return ds

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.source == "files" and self.features:
            return Path(self.features[0]).stem
        return self.source


@dataclass(frozen=True)
class RunConfig:
    """One experiment: a dataset, a method, base settings and sweep grids.

    Empty grids fall back to the value in ``base``. Every combination of the
    grids is one grid point.
    """

    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    method: str = "hmvc"
    base: HmvcConfig = field(default_factory=HmvcConfig)
    m: int = 100
    eta: float = 2.0
    knn_k: int = 10
    alphas: tuple = ()
    betas: tuple = ()
    mus: tuple = ()
    filter_orders: tuple = ()
    orders: tuple = ()
    out_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.method not in ("hmvc", "ahmvc"):
            raise ConfigError(f"method must be 'hmvc' or 'ahmvc', got {self.method!r}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def grid(self) -> list[HmvcConfig]:
        b = self.base
        axes = (self.alphas or (b.alpha,), self.betas or (b.beta,), self.mus or (b.mu,),
                self.filter_orders or (b.filter_order,), self.orders or (b.similarity_order,))
        return [dataclasses.replace(b, alpha=a, beta=be, mu=mu, filter_order=k,
                                    similarity_order=n)
                for a, be, mu, k, n in itertools.product(*axes)]


@dataclass
class GridResult:
    """Outcome of one grid point; ``report`` is None when it failed."""

    index: int
    config: HmvcConfig
    order: object
    report: ClusteringReport | None
    status: str = "ok"
    iterations: int = 0
    converged: bool = False
    objective_trace: list = field(default_factory=list)
    term_trace: list = field(default_factory=list)
    graph: np.ndarray | None = None
    anchors: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "ok"


# --------------------------------------------------------------------------
# running

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if x == INF:
            return "inf"
        return repr(x)
    return str(x)


def _run_point(index: int, cfg: HmvcConfig, run_cfg: RunConfig,
               dataset: MultiViewDataset) -> GridResult:
    order = cfg.order_for(dataset)
    try:
        t0 = time.perf_counter()
        if run_cfg.method == "hmvc":
            state = fit(dataset, cfg)
            elapsed = time.perf_counter() - t0
            graph, anchors = state.S, ()
            if cfg.clusterer == "spectral":
                labels = spectral_cluster(graph, dataset.n_clusters, cfg.seed)
            else:
                labels = kmeans(graph, dataset.n_clusters, cfg.seed)
        else:
            state = fit_anchor(dataset, cfg, m=run_cfg.m, eta=run_cfg.eta, knn_k=run_cfg.knn_k)
            elapsed = time.perf_counter() - t0
            graph, anchors = state.Z, state.anchors.indices
            labels = anchor_cluster(graph, dataset.n_clusters, cfg.seed)
        report = evaluate(labels, dataset.labels, elapsed)
        return GridResult(index, cfg, order, report, "ok", state.iterations, state.converged,
                          list(state.objective_trace), list(state.term_trace), graph, anchors)
    except (HMVCError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.warning("grid point %d failed: %s", index, exc)
        return GridResult(index, cfg, order, None, f"error: {type(exc).__name__}: {exc}")


def report_row(result: GridResult, run_cfg: RunConfig, dataset_name: str) -> dict:
    cfg = result.config
    rep = result.report
    metrics = rep.metrics() if rep is not None else dict.fromkeys(("acc", "nmi", "ari", "f1",
                                                                    "pur"))
    return {
        "dataset": dataset_name, "method": run_cfg.method,
        "alpha": cfg.alpha, "beta": cfg.beta, "mu": cfg.mu, "k": cfg.filter_order,
        "n": result.order, "m": run_cfg.m if run_cfg.method == "ahmvc" else None,
        "seed": cfg.seed, **metrics,
        "seconds": rep.elapsed_seconds if rep is not None else None,
        "iterations": result.iterations, "converged": result.converged,
        "status": result.status,
    }


def write_trace(path, result: GridResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("iteration", "objective", *TRACE_TERMS))
        for it, (obj, terms) in enumerate(zip(result.objective_trace, result.term_trace)):
            w.writerow((it, repr(float(obj)), *(repr(float(terms[t])) for t in TRACE_TERMS)))


def write_report(out_dir, rows: list[dict]) -> None:
    out = Path(out_dir)
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
    clean = [{k: ("inf" if v == INF else v) for k, v in row.items()} for row in rows]
    with open(out / "report.json", "w") as fh:
        json.dump(clean, fh, indent=2)


def _save_point(directory: Path, result: GridResult, method: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    write_trace(directory / "trace.csv", result)
    if result.graph is None:
        return
    write_matrix(directory / ("Z.npy" if method == "ahmvc" else "S.npy"), result.graph)
    if result.anchors:
        (directory / "anchors.txt").write_text("".join(f"{i}\n" for i in result.anchors))
    if result.report is not None:
        (directory / "labels.txt").write_text("".join(f"{int(v)}\n"
                                                      for v in result.report.labels))


def run(config: RunConfig, dataset: MultiViewDataset | None = None) -> list[GridResult]:
    """Execute every grid point; failures are recorded in ``status``.

    Results come back in grid order regardless of ``config.jobs``. With
    ``out_dir`` set, a single grid point writes straight into it and a
    larger grid uses one ``pNNN`` subdirectory per point.
    """
    dataset = dataset if dataset is not None else config.dataset.load()
    grid = config.grid()
    if config.jobs > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(lambda ic: _run_point(ic[0], ic[1], config, dataset),
                                    enumerate(grid)))
    else:
        results = [_run_point(i, c, config, dataset) for i, c in enumerate(grid)]
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for res in results:
            target = out if len(results) == 1 else out / f"p{res.index:03d}"
            _save_point(target, res, config.method)
        name = config.dataset.name or dataset.name
        write_report(out, [report_row(r, config, name) for r in results])
    return results


def rows_to_csv(rows: list[dict], columns=None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


# --------------------------------------------------------------------------
# ablations

def ablation_filter_order(config: RunConfig, k_values,
                          dataset: MultiViewDataset | None = None) -> list[dict]:
    """One report row per filter order, other settings held at ``config.base``."""
    cfg = dataclasses.replace(config, filter_orders=tuple(int(k) for k in k_values),
                              alphas=(), betas=(), mus=(), orders=())
    name = config.dataset.label
    return [report_row(r, cfg, name) for r in run(cfg, dataset)]


def ablation_similarity_order(config: RunConfig, n_values,
                              dataset: MultiViewDataset | None = None) -> list[dict]:
    """One report row per similarity order (``inf`` allowed for the full model)."""
    cfg = dataclasses.replace(config, orders=tuple(parse_order(n) for n in n_values),
                              alphas=(), betas=(), mus=(), filter_orders=())
    name = config.dataset.label
    return [report_row(r, cfg, name) for r in run(cfg, dataset)]


# --------------------------------------------------------------------------
# edge diagnostics

def retained_edges(graph, K: int | None = 5, threshold: float | None = None) -> set:
    """Undirected edges ``(i, j)``, ``i < j``, kept from a graph.

    Sparse adjacencies keep every off-diagonal nonzero. Dense similarity
    matrices keep entries above ``threshold`` when it is given, otherwise
    each row's ``K`` largest positive off-diagonal entries (ties to the
    lower column), symmetrized by union.
    """
    if isinstance(graph, SparseAdjacency):
        graph = graph.edges
    if sp.issparse(graph):
        coo = sp.triu(graph, k=1).tocoo()
        keep = coo.data != 0
        return set(zip(coo.row[keep].tolist(), coo.col[keep].tolist()))
    if isinstance(graph, (SimilarityGraph, MixedHighOrderGraph)):
        graph = graph.matrix
    M = np.array(graph, dtype=np.float64)
    np.fill_diagonal(M, 0.0)
    if threshold is not None:
        i, j = np.nonzero(np.triu(M > threshold, k=1) | np.triu(M.T > threshold, k=1))
        return set(zip(i.tolist(), j.tolist()))
    if K is None or K < 1:
        raise ValueError("K must be >= 1 when no threshold is given")
    order = np.argsort(-M, axis=1, kind="stable")[:, :K]
    edges = set()
    for i, row in enumerate(order):
        for j in row:
            if M[i, j] > 0:
                edges.add((min(i, int(j)), max(i, int(j))))
    return edges


def edge_quality(graph, labels, K: int | None = 5,
                 threshold: float | None = None) -> tuple[int, float]:
    """``(NwE, AccE)``: inter-class edge count and intra-class edge fraction.

    AccE is NaN for a graph with no retained edges.
    """
    y = np.asarray(labels).ravel()
    edges = retained_edges(graph, K, threshold)
    n_nodes = graph.shape[0] if hasattr(graph, "shape") else np.asarray(graph).shape[0]
    if len(y) != n_nodes:
        raise ValueError(f"{len(y)} labels for a {n_nodes}-node graph")
    if not edges:
        return 0, math.nan
    wrong = sum(1 for i, j in edges if y[i] != y[j])
    return wrong, 1.0 - wrong / len(edges)


def knn_order_graphs(X, K: int = 5, orders=(1, 2, 3, INF), rule: str = "mutual",
                     unit_eigenvalue_tol: float = 1e-8) -> dict:
    """Order-``n`` graphs grown from a K-nearest-neighbour graph.

    The KNN graph gets self-loops and symmetric normalization; order ``n``
    is its ``n``-th power and ``inf`` the projector onto its unit
    eigenspace, i.e. one block per connected component.
    """
    A = knn_graph(X, K, rule=rule)
    W = normalize_adjacency(A, add_self_loops=True).matrix
    W1 = SimilarityGraph(W.toarray() if sp.issparse(W) else np.asarray(W), 1, SYMMETRIC)
    out = {}
    for n in orders:
        n = parse_order(n)
        out[n] = infinity_graph(W1, unit_eigenvalue_tol) if n == INF else power_graph(W1, n)
    return out


def two_moons_demo(n_points: int = 200, noise_sigma: float = 0.05, seed: int = 0,
                   K: int = 5, orders=(1, 2, 3, INF), rule: str = "mutual") -> list[dict]:
    """NwE/AccE of the top-``K`` graph at each order on one two-moons draw."""
    ds = generate_two_moons(n_points, noise_sigma, seed)
    graphs = knn_order_graphs(ds.views[0].data, K, orders, rule)
    rows = []
    for n, g in graphs.items():
        nwe, acce = edge_quality(g, ds.labels, K)
        rows.append({"seed": seed, "order": n, "nwe": nwe, "acce": acce})
    return rows


def change_rate_table(X, n_max: int = 6, mode: str = SYMMETRIC) -> list[dict]:
    """Mean relative change between consecutive orders of the cosine graph of ``X``."""
    res = order_change_rate(first_order_graph(X, mode), n_max)
    return [{"order": n, "rate": float(r), "skipped": s}
            for n, r, s in zip(res.orders, res.rates, res.skipped)]


# --------------------------------------------------------------------------
# plain-text configuration

def read_config_file(path) -> dict:
    """``key = value`` lines (``#`` comments); keys use ``_`` or ``-`` interchangeably.

    A leading ``[section]`` header is optional and ignored.
    """
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.replace("-", "_")] = value
    return out


__all__ = [
    "DatasetSpec", "GridResult", "REPORT_COLUMNS", "RunConfig", "ablation_filter_order",
    "ablation_similarity_order", "change_rate_table", "edge_quality", "knn_order_graphs",
    "read_config_file", "report_row", "retained_edges", "rows_to_csv", "run",
    "two_moons_demo", "write_report", "write_trace",
]
