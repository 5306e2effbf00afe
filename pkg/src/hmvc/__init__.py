"""High-order multi-view clustering with graph-filtered features.

Typical use::

    from hmvc import HmvcConfig, fit, spectral_cluster
    state = fit(dataset, HmvcConfig(filter_order=2))
    labels = spectral_cluster(state.S, dataset.n_clusters, seed=42)
"""
__version__ = "0.1.0"

from .anchor import AnchorGraph, AnchorSet, anchor_highorder, fit_anchor, select_anchors
from .clustering import (
    ClusteringReport,
    accuracy,
    anchor_cluster,
    ari,
    evaluate,
    f1,
    kmeans,
    nmi,
    purity,
    spectral_cluster,
)
from .dataset import (
    FeatureMatrix,
    MultiViewDataset,
    SparseAdjacency,
    generate_gaussian_blobs,
    generate_planted_graph,
    generate_two_moons,
    knn_graph,
    load_attributed_graph,
    load_feature_views,
)
from .graph_filter import filter_features, laplacian, normalize_adjacency, smoothness
from .highorder import (
    INF,
    SimilarityGraph,
    cosine_similarity_graph,
    first_order_graph,
    infinity_graph,
    mixed_graph,
    normalize_similarity,
    order_change_rate,
    power_graph,
)
from .learner import HmvcConfig, LearnerState, fit

__all__ = [
    "INF", "AnchorGraph", "AnchorSet", "ClusteringReport", "FeatureMatrix", "HmvcConfig",
    "LearnerState", "MultiViewDataset", "SimilarityGraph", "SparseAdjacency", "accuracy",
    "anchor_cluster", "anchor_highorder", "ari", "cosine_similarity_graph", "evaluate", "f1",
    "filter_features", "first_order_graph", "fit", "fit_anchor", "generate_gaussian_blobs",
    "generate_planted_graph", "generate_two_moons", "infinity_graph", "kmeans", "knn_graph",
    "laplacian", "load_attributed_graph", "load_feature_views", "mixed_graph", "nmi",
    "normalize_adjacency", "normalize_similarity", "order_change_rate", "power_graph",
    "purity", "select_anchors", "smoothness", "spectral_cluster", "__version__",
]
