import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import connected_graph, random_graph
from hmvc.errors import DimensionMismatch, IsolatedNode, ZeroSignal
from hmvc.graph_filter import (
    NormalizedGraph,
    filter_features,
    laplacian,
    normalize_adjacency,
    smooth_with_operator,
    smoothness,
)
from hmvc.highorder import ImplicitCosineGraph, first_order_graph


def spectral_filter(A, X, k):
    """``U (I - Lambda/2)^k U' X`` from the eigendecomposition of ``L``."""
    L = laplacian(normalize_adjacency(A)).matrix
    lam, U = np.linalg.eigh(L)
    return U @ np.diag((1 - lam / 2) ** k) @ U.T @ X


def test_two_node_edge():
    M = normalize_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]])).matrix
    np.testing.assert_allclose(M, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    L = laplacian(normalize_adjacency(np.array([[0.0, 1.0], [1.0, 0.0]])))
    np.testing.assert_allclose(L.matrix, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(L.matrix), [0.0, 1.0], atol=1e-12)


def test_no_edges_with_loops_is_identity():
    M = normalize_adjacency(np.zeros((4, 4))).matrix
    np.testing.assert_array_equal(M, np.eye(4))
    np.testing.assert_array_equal(laplacian(NormalizedGraph(np.eye(4))).matrix, 0)


def test_isolated_node_without_loops():
    A = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
    with pytest.raises(IsolatedNode):
        normalize_adjacency(A, add_self_loops=False)
    normalize_adjacency(A, add_self_loops=True)


def test_normalization_brute_force(rng):
    A = random_graph(rng, 6, weighted=True)
    M = normalize_adjacency(A).matrix
    At = A + np.eye(6)
    d = At.sum(axis=1)
    for i in range(6):
        for j in range(6):
            assert abs(M[i, j] - At[i, j] / np.sqrt(d[i] * d[j])) < 1e-15


def test_sparse_stays_sparse(rng):
    A = sp.csr_matrix(random_graph(rng, 8))
    G = normalize_adjacency(A)
    assert sp.issparse(G.matrix) and sp.issparse(laplacian(G).matrix)
    np.testing.assert_allclose(G.matrix.toarray(), normalize_adjacency(A.toarray()).matrix)


def test_filter_identity_cases(rng):
    X = rng.normal(size=(5, 3))
    L = laplacian(normalize_adjacency(random_graph(rng, 5)))
    np.testing.assert_array_equal(filter_features(X, L, 0).matrix, X)
    np.testing.assert_array_equal(filter_features(X, np.zeros((5, 5)), 3).matrix, X)


def test_filter_spectral_oracle(rng):
    A = random_graph(rng, 8)
    X = rng.normal(size=(8, 3))
    H = filter_features(X, laplacian(normalize_adjacency(A)), 2).matrix
    np.testing.assert_allclose(H, spectral_filter(A, X, 2), atol=1e-8)


def test_filter_dimension_mismatch(rng):
    L = laplacian(normalize_adjacency(random_graph(rng, 4)))
    with pytest.raises(DimensionMismatch):
        filter_features(rng.normal(size=(5, 2)), L, 1)


def test_smoothness_of_eigenvectors(rng):
    L = laplacian(normalize_adjacency(random_graph(rng, 7)))
    lam, U = np.linalg.eigh(L.matrix)
    for i in range(7):
        assert abs(smoothness(U[:, i], L) - lam[i]) < 1e-8


def test_constant_signal_on_connected_graph(rng):
    A = connected_graph(rng, 6)
    L = laplacian(normalize_adjacency(A))
    # null vector of the normalized Laplacian is D^{1/2} 1
    d = A.sum(axis=1) + 1
    assert abs(smoothness(np.sqrt(d), L)) < 1e-8


def test_smoothness_direct_summation(rng):
    A = random_graph(rng, 5, weighted=True)
    L = laplacian(normalize_adjacency(A)).matrix
    u = rng.normal(size=5)
    num = sum(u[i] * L[i, j] * u[j] for i in range(5) for j in range(5))
    assert abs(smoothness(u, L) - num / (u @ u)) < 1e-12


def test_zero_signal():
    with pytest.raises(ZeroSignal):
        smoothness(np.zeros(3), laplacian(normalize_adjacency(np.zeros((3, 3)))))


def test_implicit_operator_matches_dense(rng):
    X = rng.normal(size=(9, 4))
    W = first_order_graph(X).matrix
    L = laplacian(NormalizedGraph(W, self_loops=False))
    np.testing.assert_allclose(smooth_with_operator(X, ImplicitCosineGraph(X), 3),
                               filter_features(X, L, 3).matrix, atol=1e-12)


@given(st.integers(0, 10_000), st.integers(2, 12), st.integers(0, 4), st.integers(0, 4))
def test_filter_semigroup(seed, n, a, b):
    rng = np.random.default_rng(seed)
    L = laplacian(normalize_adjacency(random_graph(rng, n)))
    X = rng.normal(size=(n, 3))
    two = filter_features(filter_features(X, L, a).matrix, L, b).matrix
    np.testing.assert_allclose(two, filter_features(X, L, a + b).matrix, atol=1e-8)


@given(st.integers(0, 10_000), st.integers(2, 12))
def test_laplacian_spectrum_in_0_2(seed, n):
    rng = np.random.default_rng(seed)
    G = normalize_adjacency(random_graph(rng, n, weighted=True))
    np.testing.assert_allclose(G.matrix, G.matrix.T, atol=1e-10)
    lam = np.linalg.eigvalsh(laplacian(G).matrix)
    assert lam.min() > -1e-8 and lam.max() < 2 + 1e-8
    # response of the filter stays within the unit disc
    assert np.abs(1 - lam / 2).max() <= 1 + 1e-12


@given(st.integers(0, 10_000), st.integers(3, 12), st.integers(1, 4))
def test_filtering_is_low_pass(seed, n, k):
    rng = np.random.default_rng(seed)
    L = laplacian(normalize_adjacency(random_graph(rng, n, weighted=True)))
    X = rng.normal(size=(n, 3))
    H = filter_features(X, L, k).matrix
    before = np.mean([smoothness(X[:, j], L) for j in range(3)])
    after = np.mean([smoothness(H[:, j], L) for j in range(3)])
    assert after <= before + 1e-10
