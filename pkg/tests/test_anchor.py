import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import central_gradient, random_graph
from hmvc.anchor import (
    AnchorSet,
    anchor_filtered_views,
    anchor_highorder,
    fit_anchor,
    mixed_degrees,
    select_anchors,
)
from hmvc.clustering import accuracy, anchor_cluster, spectral_cluster
from hmvc.dataset import MultiViewDataset, generate_gaussian_blobs, generate_planted_graph
from hmvc.errors import ConfigError, MTooLarge
from hmvc.highorder import ImplicitCosineGraph, first_order_graph, power_graph
from hmvc.learner import (
    HmvcConfig,
    LearnerState,
    filtered_views,
    fit,
    objective,
    update_view_graph,
)


def brute_force_selection(degrees, m, eta):
    """Re-evaluate every p_i over the remaining nodes at each step."""
    chosen = []
    remaining = list(range(len(degrees)))
    for _ in range(m):
        g = {i: degrees[i] ** eta / sum(degrees[j] ** eta for j in remaining) for i in remaining}
        total = sum(g.values())
        p = {i: g[i] / total for i in remaining}
        best = max(remaining, key=lambda i: (p[i], -i))
        chosen.append(best)
        remaining.remove(best)
    return chosen


def test_star_center():
    A = np.zeros((6, 6))
    A[0, 1:] = A[1:, 0] = 1
    assert select_anchors([A], 1).indices == (0,)


def test_all_but_minimum_degree(rng):
    A = random_graph(rng, 9, 0.5)
    d = mixed_degrees([A])
    s = select_anchors([A], 8)
    (missing,) = set(range(9)) - set(s.indices)
    # ties go to the lower id, so the highest-id minimum-degree node is left out
    assert missing == max(np.flatnonzero(d == d.min()))


def test_selection_step_oracle(rng):
    views = [random_graph(rng, 20, 0.2), random_graph(rng, 20, 0.3)]
    d = mixed_degrees(views)
    assert list(select_anchors(views, 5, eta=2.0).indices) == brute_force_selection(d, 5, 2.0)


def test_mixed_degrees_definition(rng):
    A = random_graph(rng, 7, weighted=True)
    np.testing.assert_allclose(mixed_degrees([sp.csr_matrix(A)]), (A + A @ A).sum(axis=1))


def test_selection_errors(rng):
    A = random_graph(rng, 5)
    with pytest.raises(MTooLarge):
        select_anchors([A], 5)
    with pytest.raises(ValueError):
        select_anchors([A], 2, eta=1.0)
    with pytest.raises(ValueError):
        AnchorSet((1, 1))


def test_ties_to_lower_id():
    A = np.ones((5, 5)) - np.eye(5)
    assert select_anchors([A], 3).indices == (0, 1, 2)


@given(st.integers(0, 10_000), st.integers(4, 15), st.sampled_from([1.5, 2.0, 4.0]))
def test_selection_invariant_to_view_order(seed, n, eta):
    rng = np.random.default_rng(seed)
    views = [random_graph(rng, n) for _ in range(3)]
    m = n // 2
    assert select_anchors(views, m, eta) == select_anchors(views[::-1], m, eta)


def test_highorder_identity(rng):
    W1 = first_order_graph(rng.normal(size=(6, 3))).matrix
    np.testing.assert_array_equal(anchor_highorder(W1[[4, 0]], W1, 1), W1[[4, 0]])


def test_highorder_eight_nodes(rng):
    W1 = first_order_graph(rng.normal(size=(8, 3)))
    idx = [5, 2, 7]
    np.testing.assert_allclose(anchor_highorder(W1.matrix[idx], W1.matrix, 3),
                               power_graph(W1, 3).matrix[idx], atol=1e-10)


def test_highorder_second_order_blocks(rng):
    W = first_order_graph(rng.normal(size=(7, 2))).matrix
    idx = np.array([1, 4])
    rest = np.setdiff1d(np.arange(7), idx)
    R = anchor_highorder(W[idx], W, 2)
    # rows of W^2 split into anchor/non-anchor column blocks
    np.testing.assert_allclose(R[:, idx], W[idx] @ W[idx].T, atol=1e-12)
    np.testing.assert_allclose(R[:, rest], W[idx] @ W[rest].T, atol=1e-12)


def test_highorder_rejects_infinity(rng):
    W = first_order_graph(rng.normal(size=(5, 2))).matrix
    with pytest.raises(ConfigError):
        anchor_highorder(W[:2], W, np.inf)


@given(st.integers(0, 10_000), st.integers(2, 12), st.integers(1, 5), st.booleans())
def test_sliced_powers_match(seed, n, order, implicit):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    W1 = first_order_graph(X)
    m = int(rng.integers(1, n + 1))
    idx = rng.choice(n, size=m, replace=False)
    op = ImplicitCosineGraph(X) if implicit else W1.matrix
    rows = op.rows(idx) if implicit else W1.matrix[idx]
    np.testing.assert_allclose(anchor_highorder(rows, op, order),
                               power_graph(W1, order).matrix[idx], atol=1e-10)


def test_all_nodes_recovers_full_model(rng):
    ds = generate_gaussian_blobs(8, 2, view_dims=(4, 3), seed=5)
    cfg = HmvcConfig(max_iters=30)
    full = fit(ds, cfg)
    perm = rng.permutation(8)
    ag = fit_anchor(ds, cfg, anchors=perm)
    assert np.abs(ag.Z - full.S[perm].T).max() < 1e-6
    for v in range(2):
        assert np.abs(ag.Z_v[v] - full.S_v[v][perm].T).max() < 1e-6


def test_anchor_filtering_matches_full(rng):
    ds = generate_gaussian_blobs(12, 2, view_dims=(4, 3), seed=1)
    for a, b in zip(anchor_filtered_views(ds, 2), filtered_views(ds, 2)):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_per_view_finite_difference():
    ds = generate_gaussian_blobs(10, 2, view_dims=(4, 3), seed=3)
    cfg = HmvcConfig(max_iters=3, rel_tol=0.0)
    ag = fit_anchor(ds, cfg, anchors=(2, 5, 7))
    idx = np.array(ag.anchors.indices)
    H = anchor_filtered_views(ds, cfg.filter_order)
    D = [h[idx] for h in H]
    F = [anchor_highorder(ImplicitCosineGraph(h).rows(idx), ImplicitCosineGraph(h), 2,
                          mixed=True) for h in H]
    # Z_v was solved before the final S and gamma updates; re-solve at the returned state
    state = LearnerState([z.T.copy() for z in ag.Z_v], ag.Z.T.copy(), ag.gamma.copy())
    for v in range(2):
        state.S_v[v] = update_view_graph(v, state, H[v], F[v], cfg, D[v])

        def f(Y, v=v):
            trial = state.copy()
            trial.S_v[v] = Y
            return objective(trial, H, F, cfg, D)

        assert np.abs(central_gradient(f, state.S_v[v])).max() < 1e-6


def test_anchor_trace_monotone_and_clusters():
    ds = generate_planted_graph(150, seed=2)
    cfg = HmvcConfig(alpha=100.0)
    ag = fit_anchor(ds, cfg, m=30)
    assert np.all(np.diff(ag.objective_trace) <= 1e-9)
    assert ag.Z.shape == (150, 30) and ag.anchors.m == 30
    # 30 anchors should lose little against the full N x N graph
    full = accuracy(spectral_cluster(fit(ds, cfg).S, 3, 42), ds.labels)
    assert accuracy(anchor_cluster(ag.Z, 3, 42), ds.labels) >= full - 0.05


def test_feature_data_anchor_fit():
    ds = generate_gaussian_blobs(90, 3, seed=4)
    ag = fit_anchor(ds, HmvcConfig(), m=20)
    assert np.all(np.diff(ag.objective_trace) <= 1e-9)
    assert accuracy(anchor_cluster(ag.Z, 3, 42), ds.labels) > 0.9


def test_anchor_config_errors():
    ds = generate_gaussian_blobs(30, 3, seed=0)
    with pytest.raises(ConfigError):
        fit_anchor(ds, HmvcConfig(similarity_order="inf"), m=5)
    with pytest.raises(ConfigError):
        fit_anchor(ds, HmvcConfig(sim_normalization="rw"), m=5)


def test_anchor_shared_graph(rng):
    A = sp.csr_matrix(random_graph(rng, 20, 0.3))
    ds = MultiViewDataset(views=(rng.normal(size=(20, 3)), rng.normal(size=(20, 4))),
                          adjacencies=(A,), n_clusters=2)
    ag = fit_anchor(ds, HmvcConfig(), m=5)
    assert ag.Z.shape == (20, 5)


@pytest.mark.slow
def test_large_scale_timing():
    import time

    ds = generate_gaussian_blobs(7500, 8, view_dims=(100, 60), seed=0)
    t0 = time.perf_counter()
    ag = fit_anchor(ds, HmvcConfig(), m=100)
    assert time.perf_counter() - t0 < 300
    assert ag.Z.shape == (7500, 100)
