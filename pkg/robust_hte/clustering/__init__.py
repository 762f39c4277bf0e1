"""Latent-space clustering with outlier clusters."""

from .kmeans import kmeans, as_code_matrix
from .outliers import detect_outliers, cluster_with_outliers
from .selection import select_k, default_k_range, merge_small_clusters

__all__ = [
    "kmeans",
    "as_code_matrix",
    "detect_outliers",
    "cluster_with_outliers",
    "select_k",
    "default_k_range",
    "merge_small_clusters",
]
