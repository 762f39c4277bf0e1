"""Outlier detection in latent space and promotion of outliers to their own clusters."""

import logging

import numpy as np

from .kmeans import as_code_matrix, kmeans
from ..core.types import Clustering, RngState
from ..core.rng import split_rng
from ..core.exceptions import DomainError

logger = logging.getLogger(__name__)


def detect_outliers(codes, multiplier: float = 3.0) -> np.ndarray:
    """Indices whose distance to the coordinate-wise median is unusually large.

    Point i is flagged when its distance exceeds
    ``median(dist) + multiplier * MAD(dist)``. A zero MAD flags nothing.

    Returns:
        Sorted integer array of outlier indices
    """
    x = as_code_matrix(codes)
    if x.shape[0] < 4:
        raise DomainError(
            f"Outlier detection needs n >= 4 codes, got {x.shape[0]}",
            parameter="n",
            value=x.shape[0]
        )
    if multiplier < 0:
        raise DomainError(f"multiplier must be non-negative, got {multiplier}", parameter="multiplier", value=multiplier)

    dist = np.linalg.norm(x - np.median(x, axis=0), axis=1)
    center = np.median(dist)
    mad = np.median(np.abs(dist - center))
    if mad == 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(dist > center + multiplier * mad).astype(np.int64)


def cluster_with_outliers(codes, k: int, multiplier: float, rng: RngState) -> Clustering:
    """k-means on inliers, with detected outliers clustered separately.

    Inliers are clustered with ``rng`` itself, so with no outliers the result
    equals ``kmeans(codes, k, rng)``. Outliers get max(1, floor(sqrt(count)))
    clusters of their own, numbered after the inlier clusters and listed in
    ``outlier_clusters``.
    """
    x = as_code_matrix(codes)
    outliers = detect_outliers(x, multiplier)
    inliers = np.setdiff1d(np.arange(x.shape[0]), outliers)

    if inliers.size < k:
        logger.warning(f"Only {inliers.size} inliers for k={k}; reducing k to {inliers.size}")
        k = int(inliers.size)
    inner = kmeans(x[inliers], k, rng)
    if outliers.size == 0:
        return inner

    k_out = max(1, int(np.floor(np.sqrt(outliers.size))))
    outer = kmeans(x[outliers], k_out, split_rng(rng, "outliers"))

    labels = np.empty(x.shape[0], dtype=np.int64)
    labels[inliers] = inner.labels
    labels[outliers] = outer.labels + k
    logger.info(f"Promoted {outliers.size} outliers into {k_out} cluster(s) beside {k} inlier clusters")
    return Clustering(
        labels=labels,
        centroids=np.vstack([inner.centroids, outer.centroids]),
        outlier_clusters=frozenset(range(k, k + k_out)),
        objective_trace=list(inner.objective_trace)
    )
