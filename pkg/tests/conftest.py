import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=30,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_graph(rng, n, p=0.4, weighted=False):
    """Symmetric nonnegative adjacency with zero diagonal (may be disconnected)."""
    upper = np.triu(rng.random((n, n)) < p, k=1).astype(float)
    if weighted:
        upper *= rng.uniform(0.1, 2.0, size=(n, n))
    return upper + upper.T


def connected_graph(rng, n, p=0.4):
    """Random graph plus a path through all nodes."""
    A = random_graph(rng, n, p)
    idx = np.arange(n - 1)
    A[idx, idx + 1] = A[idx + 1, idx] = 1.0
    return A


def random_instance(rng, n=6, V=2, d=3, alpha=None, beta=None, mu=None):
    """Filtered features ``H`` and mixed graphs ``F`` for small learner tests."""
    from hmvc.highorder import first_order_graph, mixed_graph
    from hmvc.learner import HmvcConfig

    H = [rng.normal(size=(n, d)) for _ in range(V)]
    F = [mixed_graph(first_order_graph(h), 2).matrix for h in H]
    cfg = HmvcConfig(alpha=alpha or float(rng.uniform(0.5, 3.0)),
                     beta=beta or float(rng.uniform(0.5, 3.0)),
                     mu=mu or float(rng.uniform(0.5, 3.0)))
    return H, F, cfg


def central_gradient(f, X, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at matrix ``X``."""
    G = np.zeros_like(X)
    for idx in np.ndindex(*X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        G[idx] = (f(X + E) - f(X - E)) / (2 * h)
    return G


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sparse_path_graph():
    return sp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float))
