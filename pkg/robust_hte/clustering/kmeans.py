"""k-means with k-means++ seeding and plain Lloyd iterations."""

import logging

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from ..core.types import Clustering, RngState
from ..core.rng import spawn_seed
from ..core.exceptions import ClusteringError, DomainError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 300
OBJECTIVE_RTOL = 1e-10


def as_code_matrix(codes) -> np.ndarray:
    """Coerce latent codes (array or LatentCodes) to an n x l float matrix."""
    codes = getattr(codes, "z", codes)
    codes = np.asarray(codes, dtype=np.float64)
    if codes.ndim == 1:
        codes = codes.reshape(-1, 1)
    if codes.ndim != 2 or codes.shape[0] == 0:
        raise DomainError(f"Codes must be a non-empty n x l matrix, got shape {codes.shape}", parameter="codes")
    return codes


def _assign(x: np.ndarray, centroids: np.ndarray) -> tuple:
    # argmin returns the first minimum, so ties go to the lower cluster id
    dist = cdist(x, centroids, metric="sqeuclidean")
    labels = np.argmin(dist, axis=1)
    return labels, dist[np.arange(x.shape[0]), labels]


def _reseed_empty(x: np.ndarray, labels: np.ndarray, own_dist: np.ndarray, k: int) -> np.ndarray:
    """Move the point farthest from its centroid into each empty cluster."""
    labels = labels.copy()
    own_dist = own_dist.copy()
    sizes = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(sizes == 0):
        donors = np.flatnonzero(sizes[labels] > 1)
        i = donors[np.argmax(own_dist[donors])]
        logger.debug(f"Reseeding empty cluster {j} at point {i}")
        sizes[labels[i]] -= 1
        sizes[j] += 1
        labels[i] = j
        own_dist[i] = 0.0
    return labels


def _centroids(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums / np.bincount(labels, minlength=k)[:, None]


def _objective(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    return float(((x - centroids[labels]) ** 2).sum())


def kmeans(codes, k: int, rng: RngState, max_iterations: int = MAX_ITERATIONS) -> Clustering:
    """Partition codes into ``k`` clusters.

    Centroids are seeded with k-means++ and refined by Lloyd iterations until
    the assignment stops changing or ``max_iterations`` is reached. The
    within-cluster sum of squares after every iteration is recorded in
    ``objective_trace``.

    Args:
        codes: n x l matrix (or LatentCodes, whose ``z`` is used)
        k: Number of clusters, 1 <= k <= n
        rng: Stream for the seeding step

    Returns:
        Clustering with no outlier clusters

    Raises:
        DomainError: k outside [1, n]
        ClusteringError: the objective increased between iterations
    """
    x = as_code_matrix(codes)
    n = x.shape[0]
    if k < 1 or k > n:
        raise DomainError(f"k must lie in [1, {n}], got {k}", parameter="k", value=k)

    centroids, _ = kmeans_plusplus(x, n_clusters=k, random_state=spawn_seed(rng))
    centroids = np.asarray(centroids, dtype=np.float64)
    labels = None
    trace = []
    for iteration in range(max_iterations):
        new_labels, own_dist = _assign(x, centroids)
        new_labels = _reseed_empty(x, new_labels, own_dist, k)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _centroids(x, labels, k)
        objective = _objective(x, labels, centroids)
        if trace and objective > trace[-1] + OBJECTIVE_RTOL * max(1.0, trace[-1]):
            raise ClusteringError(
                f"k-means objective rose from {trace[-1]} to {objective}",
                iteration=iteration
            )
        trace.append(objective)
    else:
        logger.warning(f"k-means stopped after {max_iterations} iterations without a fixpoint")

    return Clustering(labels=labels, centroids=centroids, objective_trace=trace)
