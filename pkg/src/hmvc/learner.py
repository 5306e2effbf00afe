"""Multi-view graph learning by alternating minimization.

Objective, for per-view graphs ``S_v``, consensus ``S`` and simplex weights
``gamma``::

    sum_v gamma_v (||H_v' - D_v' S_v||^2 + alpha ||S_v - F_v||^2)
        + beta ||S - sum_v gamma_v S_v||^2 + mu ||S||^2

``H_v`` (N x d) are the filtered features and ``F_v`` the mixed high-order
similarity graphs. For the full model the dictionary ``D_v`` is ``H_v``
itself (self-expression, ``S_v`` is N x N); the anchor model passes the
anchor rows of ``H_v`` so that ``S_v`` is m x N. Every block update below
is an exact minimizer, so the objective never increases.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dataset import MultiViewDataset
from .errors import ConfigError, QPError, SolveFailure
from .graph_filter import (
    Laplacian,
    NormalizedGraph,
    filter_features,
    laplacian,
    normalize_adjacency,
)
from .highorder import INF, SYMMETRIC, first_order_graph, mixed_graph, parse_mode, parse_order

logger = logging.getLogger(__name__)

PARAM_GRID = (1e-3, 1.0, 1e2, 1e3, 1e4)


@dataclass
class HmvcConfig:
    """Hyperparameters of the learner.

    ``similarity_order=None`` resolves to 3 for attributed-graph data and 2
    for pure-feature data.
    """

    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 1.0
    filter_order: int = 2
    similarity_order: int | float | None = None
    sim_normalization: str = SYMMETRIC
    max_iters: int = 50
    rel_tol: float = 1e-6
    seed: int = 42
    unit_eigenvalue_tol: float = 1e-8
    gamma_floor: float = 1e-8
    clusterer: str = "spectral"

    def __post_init__(self):
        for name in ("alpha", "beta", "mu"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if int(self.filter_order) != self.filter_order or self.filter_order < 0:
            raise ConfigError("filter_order must be an integer >= 0")
        self.filter_order = int(self.filter_order)
        if self.similarity_order is not None:
            self.similarity_order = parse_order(self.similarity_order)
        self.sim_normalization = parse_mode(self.sim_normalization)
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.clusterer not in ("spectral", "kmeans"):
            raise ConfigError("clusterer must be 'spectral' or 'kmeans'")

    def order_for(self, dataset: MultiViewDataset):
        if self.similarity_order is not None:
            return self.similarity_order
        return 3 if dataset.has_graphs else 2


@dataclass
class LearnerState:
    S_v: list
    S: np.ndarray
    gamma: np.ndarray
    objective_trace: list = field(default_factory=list)
    term_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def copy(self) -> "LearnerState":
        return LearnerState([s.copy() for s in self.S_v], self.S.copy(), self.gamma.copy(),
                            list(self.objective_trace), list(self.term_trace),
                            self.iterations, self.converged)


# --------------------------------------------------------------------------
# preprocessing

def filtering_laplacian(dataset: MultiViewDataset, v: int) -> Laplacian:
    """Graph used to smooth view ``v``.

    Attributed graphs use the given adjacency with self-loops; feature-only
    views use their normalized first-order similarity graph.
    """
    if dataset.has_graphs:
        return laplacian(normalize_adjacency(dataset.adjacency(v), add_self_loops=True))
    W1 = first_order_graph(dataset.views[v].data, SYMMETRIC)
    return laplacian(NormalizedGraph(W1.matrix, SYMMETRIC, self_loops=False))


def filtered_views(dataset: MultiViewDataset, k: int) -> list[np.ndarray]:
    if k == 0:
        return [np.array(v.data) for v in dataset.views]
    shared = filtering_laplacian(dataset, 0) if dataset.shared_graph else None
    return [filter_features(dataset.views[v].data, shared or filtering_laplacian(dataset, v),
                            k).matrix
            for v in range(dataset.n_views)]


def high_order_graphs(H: list, n, mode: str = SYMMETRIC,
                      unit_eigenvalue_tol: float = 1e-8) -> list[np.ndarray]:
    """Mixed similarity graph of each filtered view."""
    return [mixed_graph(first_order_graph(h, mode), n, unit_eigenvalue_tol).matrix for h in H]


def prepare(dataset: MultiViewDataset, config: HmvcConfig):
    """Filtered features and mixed high-order graphs for every view."""
    H = filtered_views(dataset, config.filter_order)
    F = high_order_graphs(H, config.order_for(dataset), config.sim_normalization,
                          config.unit_eigenvalue_tol)
    return H, F


# --------------------------------------------------------------------------
# simplex QP

def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum x = 1}``."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = ind[u - css / ind > 0][-1]
    return np.maximum(v - css[rho - 1] / rho, 0.0)


def _qp_value(P, q, g):
    return 0.5 * g @ P @ g + q @ g


def simplex_kkt_residual(P, q, gamma) -> float:
    """Scale-free KKT violation of ``min 1/2 g'Pg + q'g`` over the simplex."""
    g = np.asarray(gamma, dtype=np.float64)
    grad = P @ g + q
    active = g > 0
    if not active.any():
        return math.inf
    nu = float(np.mean(grad[active]))
    stationarity = np.abs(grad[active] - nu).max()
    dual = max(0.0, float(np.max(nu - grad[~active]))) if (~active).any() else 0.0
    primal = max(abs(float(g.sum()) - 1.0), float(max(0.0, -g.min())))
    # measured against the size of the terms in P g + q, which can cancel
    scale = max(1.0, float((np.abs(P) @ np.abs(g) + np.abs(q)).max()))
    return max(stationarity / scale, dual / scale, primal)


def _solve_on_support(P, q, support):
    # null-space form g = e_p + Z y keeps sum(g) = 1 exact however P is scaled
    idx = np.flatnonzero(support)
    p, rest = idx[0], idx[1:]
    g = np.zeros(len(q))
    g[p] = 1.0
    if len(rest):
        Z = np.zeros((len(q), len(rest)))
        Z[p] = -1.0
        Z[rest, np.arange(len(rest))] = 1.0
        y = np.linalg.lstsq(Z.T @ P @ Z, -Z.T @ (P @ g + q), rcond=None)[0]
        g = g + Z @ y
    return g


def solve_simplex_qp(P, q, tol: float = 1e-8, max_iter: int = 20000) -> np.ndarray:
    """Minimize ``1/2 g'Pg + q'g`` over the probability simplex (``P`` PSD).

    Accelerated projected gradient from the barycentre, then an exact
    equality-constrained solve on the detected support. Small problems only
    (one variable per view).
    """
    P = 0.5 * (np.asarray(P, dtype=np.float64) + np.asarray(P, dtype=np.float64).T)
    q = np.asarray(q, dtype=np.float64)
    V = len(q)
    if V == 1:
        return np.ones(1)
    L = float(np.linalg.eigvalsh(P).max())
    g = np.full(V, 1.0 / V)
    if L <= 0:
        best = np.isclose(q, q.min(), rtol=0, atol=1e-12 * max(1.0, abs(q.min())))
        return best / best.sum()
    y, t = g.copy(), 1.0
    for _ in range(max_iter):
        g_new = project_simplex(y - (P @ y + q) / L)
        if _qp_value(P, q, g_new) > _qp_value(P, q, g):
            # adaptive restart keeps the iteration monotone
            y, t = g.copy(), 1.0
            g_new = project_simplex(g - (P @ g + q) / L)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = g_new + ((t - 1.0) / t_new) * (g_new - g)
        step = np.abs(g_new - g).max()
        g, t = g_new, t_new
        if step < 1e-15 or simplex_kkt_residual(P, q, g) < tol:
            break

    candidates = [g]
    polished = _solve_on_support(P, q, g > 1e-9)
    if polished.min() >= -1e-12:
        polished = project_simplex(np.maximum(polished, 0.0))
        candidates.append(polished)
    ok = [c for c in candidates if simplex_kkt_residual(P, q, c) < tol]
    if not ok:
        # fall back to enumerating supports (at most 2^V - 1 small solves)
        for mask in range(1, 2 ** V):
            support = np.array([(mask >> i) & 1 for i in range(V)], dtype=bool)
            c = _solve_on_support(P, q, support)
            if c.min() >= -1e-12:
                c = project_simplex(np.maximum(c, 0.0))
                if simplex_kkt_residual(P, q, c) < tol:
                    ok.append(c)
    if not ok:
        raise QPError(f"simplex QP did not reach KKT residual {tol:g}")
    return min(ok, key=lambda c: (_qp_value(P, q, c), np.abs(c - g).sum()))


# --------------------------------------------------------------------------
# block updates

def _dicts(H, D):
    return H if D is None else D


def _fit_terms(H_v, D_v, S_v, F_v, alpha):
    R = H_v.T - D_v.T @ S_v
    recon = float(np.sum(R * R))
    A = S_v - F_v
    return recon, alpha * float(np.sum(A * A))


def init_consensus(H: list, alpha: float, D: list | None = None) -> LearnerState:
    """Per-view ridge self-expression ``(D D' + alpha I)^{-1} D H'``, averaged.

    With ``D = H`` this is ``(H H' + alpha I)^{-1} H H'``. Weights start uniform.
    """
    D = _dicts(H, D)
    S_v = []
    for h, d in zip(H, D):
        G = d @ d.T
        G[np.diag_indices_from(G)] += alpha
        S_v.append(_spd_solve(G, d @ h.T))
    S = sum(S_v) / len(S_v)
    return LearnerState(S_v, S, np.full(len(H), 1.0 / len(H)))


def _spd_solve(A, B):
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A, check_finite=False), B,
                                      check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolveFailure(f"SPD solve failed: {exc}") from None


def view_graph_system(v: int, state: LearnerState, H_v, F_v, config: HmvcConfig, D_v=None):
    """Matrix and right-hand side of the linear system for ``S_v``."""
    D_v = H_v if D_v is None else D_v
    g_v = max(float(state.gamma[v]), config.gamma_floor)
    others = sum((state.gamma[i] * state.S_v[i] for i in range(len(state.S_v)) if i != v),
                 np.zeros_like(state.S))
    A = D_v @ D_v.T
    A[np.diag_indices_from(A)] += config.alpha + config.beta * g_v
    B = D_v @ H_v.T + config.alpha * F_v + config.beta * (state.S - others)
    return A, B


def update_view_graph(v: int, state: LearnerState, H_v, F_v, config: HmvcConfig,
                      D_v=None) -> np.ndarray:
    """Exact minimizer over ``S_v`` with everything else fixed.

    ``(D D' + (alpha + beta gamma_v) I) S_v = D H' + alpha F_v
    + beta (S - sum_{i != v} gamma_i S_i)``, with ``gamma_v`` floored at
    ``config.gamma_floor``.
    """
    A, B = view_graph_system(v, state, H_v, F_v, config, D_v)
    return _spd_solve(A, B)


def update_consensus(state: LearnerState, config: HmvcConfig) -> np.ndarray:
    fused = sum(g * s for g, s in zip(state.gamma, state.S_v))
    return config.beta * fused / (config.beta + config.mu)


def view_weight_qp(state: LearnerState, H: list, F: list, config: HmvcConfig,
                   D: list | None = None):
    """``(P, q)`` such that the objective equals ``1/2 g'Pg + q'g + const`` in ``gamma``."""
    D = _dicts(H, D)
    V = len(H)
    M = np.array([sum(_fit_terms(H[v], D[v], state.S_v[v], F[v], config.alpha))
                  for v in range(V)])
    flat = np.stack([s.ravel() for s in state.S_v])
    P = 2.0 * config.beta * (flat @ flat.T)
    q = M - 2.0 * config.beta * (flat @ state.S.ravel())
    return P, q


def update_view_weights(state: LearnerState, H: list, F: list, config: HmvcConfig,
                        D: list | None = None) -> np.ndarray:
    if len(H) == 1:
        return np.ones(1)
    P, q = view_weight_qp(state, H, F, config, D)
    gamma = solve_simplex_qp(P, q)
    if _qp_value(P, q, gamma) > _qp_value(P, q, state.gamma):
        return state.gamma.copy()
    return gamma


def objective_terms(state: LearnerState, H: list, F: list, config: HmvcConfig,
                    D: list | None = None) -> dict:
    D = _dicts(H, D)
    recon = anchor = 0.0
    for v, g in enumerate(state.gamma):
        r, a = _fit_terms(H[v], D[v], state.S_v[v], F[v], config.alpha)
        recon += g * r
        anchor += g * a
    fused = sum(g * s for g, s in zip(state.gamma, state.S_v))
    gap = state.S - fused
    return {
        "reconstruction": recon,
        "high_order": anchor,
        "fusion": config.beta * float(np.sum(gap * gap)),
        "regularization": config.mu * float(np.sum(state.S * state.S)),
    }


def objective(state: LearnerState, H: list, F: list, config: HmvcConfig,
              D: list | None = None) -> float:
    return float(sum(objective_terms(state, H, F, config, D).values()))


def alternate(H: list, F: list, config: HmvcConfig, D: list | None = None,
              callback=None) -> LearnerState:
    """Run the block-coordinate loop (views in order, then consensus, then weights)."""
    state = init_consensus(H, config.alpha, D)
    D = _dicts(H, D)
    terms = objective_terms(state, H, F, config, D)
    state.objective_trace.append(sum(terms.values()))
    state.term_trace.append(terms)
    for it in range(1, config.max_iters + 1):
        for v in range(len(H)):
            state.S_v[v] = update_view_graph(v, state, H[v], F[v], config, D[v])
        state.S = update_consensus(state, config)
        state.gamma = update_view_weights(state, H, F, config, D)
        terms = objective_terms(state, H, F, config, D)
        obj = sum(terms.values())
        prev = state.objective_trace[-1]
        state.objective_trace.append(obj)
        state.term_trace.append(terms)
        state.iterations = it
        if callback is not None:
            callback(it, state)
        if abs(prev - obj) <= config.rel_tol * max(abs(prev), np.finfo(float).tiny):
            state.converged = True
            break
    logger.debug("learner stopped after %d iterations (converged=%s)", state.iterations,
                 state.converged)
    return state


def fit(dataset: MultiViewDataset, config: HmvcConfig | None = None,
        callback=None) -> LearnerState:
    """Filter, build high-order graphs and learn the consensus graph ``S``."""
    config = config or HmvcConfig()
    H, F = prepare(dataset, config)
    return alternate(H, F, config, callback=callback)


__all__ = [
    "HmvcConfig", "LearnerState", "PARAM_GRID", "INF", "alternate", "filtered_views",
    "fit", "high_order_graphs", "init_consensus", "objective", "objective_terms",
    "prepare", "project_simplex", "simplex_kkt_residual", "solve_simplex_qp",
    "update_consensus", "update_view_graph", "update_view_weights", "view_graph_system",
    "view_weight_qp",
]
