"""Choosing the number of clusters and enforcing the per-arm size rule."""

from typing import Iterable
import logging

import numpy as np
from sklearn.metrics import silhouette_score

from .kmeans import as_code_matrix, kmeans
from .outliers import detect_outliers
from ..core.types import Clustering, RngState
from ..core.rng import split_rng
from ..core.exceptions import DomainError

logger = logging.getLogger(__name__)

SCORE_TIE_TOL = 1e-12


def select_k(codes, k_range: Iterable[int], rng: RngState, multiplier: float = 3.0) -> int:
    """Pick k by mean silhouette score of k-means on the inlier codes.

    Ties (within 1e-12) go to the smaller k. Candidates that leave fewer than
    k + 1 inliers are skipped; if none remain the smallest candidate is returned.

    Raises:
        DomainError: empty range or a candidate outside [2, n - 1]
    """
    x = as_code_matrix(codes)
    n = x.shape[0]
    candidates = sorted(set(int(k) for k in k_range))
    if not candidates:
        raise DomainError("k_range is empty", parameter="k_range")
    if candidates[0] < 2 or candidates[-1] > n - 1:
        raise DomainError(
            f"k_range must lie in [2, {n - 1}], got {candidates[0]}..{candidates[-1]}",
            parameter="k_range",
            value=candidates
        )

    inliers = x
    if n >= 4:
        outliers = detect_outliers(x, multiplier)
        inliers = np.delete(x, outliers, axis=0)

    best_k, best_score = candidates[0], -np.inf
    for k in candidates:
        if k > inliers.shape[0] - 1:
            logger.debug(f"Skipping k={k}: only {inliers.shape[0]} inliers")
            continue
        labels = kmeans(inliers, k, split_rng(rng, f"select-k/{k}")).labels
        score = float(silhouette_score(inliers, labels))
        logger.debug(f"silhouette(k={k}) = {score:.6f}")
        if score > best_score + SCORE_TIE_TOL:
            best_k, best_score = k, score
    return best_k


def default_k_range(n: int, k_max: int = 6) -> range:
    """2..min(k_max, n - 1)."""
    return range(2, max(2, min(k_max, n - 1)) + 1)


def merge_small_clusters(
    clustering: Clustering,
    codes,
    d: np.ndarray,
    min_per_arm: int = 4
) -> Clustering:
    """Fold clusters lacking ``min_per_arm`` units in either arm into neighbours.

    The smallest ineligible cluster is merged into the eligible cluster whose
    centroid is nearest; when no cluster is eligible everything is merged into
    one. A merged cluster keeps its outlier flag only if every cluster it
    absorbed was an outlier cluster. Labels are renumbered 0..K'-1 preserving
    the original order.
    """
    x = as_code_matrix(codes)
    d = np.asarray(d).reshape(-1)
    labels = np.array(clustering.labels)
    if x.shape[0] != labels.shape[0] or d.shape[0] != labels.shape[0]:
        raise DomainError(
            f"codes ({x.shape[0]}), d ({d.shape[0]}) and labels ({labels.shape[0]}) disagree",
            parameter="n"
        )
    centroids = {c: np.array(clustering.centroids[c]) for c in range(clustering.k)}
    flagged = set(clustering.outlier_clusters)

    def arm_counts(c: int) -> tuple:
        members = labels == c
        treated = int(d[members].sum())
        return treated, int(members.sum()) - treated

    def absorb(target: int, source: int) -> None:
        labels[labels == source] = target
        centroids[target] = x[labels == target].mean(axis=0)
        del centroids[source]
        if source not in flagged:
            flagged.discard(target)
        flagged.discard(source)

    merges = 0
    while len(centroids) > 1:
        ineligible = [c for c in sorted(centroids) if min(arm_counts(c)) < min_per_arm]
        if not ineligible:
            break
        eligible = [c for c in sorted(centroids) if c not in ineligible]
        if not eligible:
            logger.warning(f"No cluster has {min_per_arm} units per arm; merging all {len(centroids)} clusters")
            survivor = min(centroids)
            for c in sorted(centroids):
                if c != survivor:
                    absorb(survivor, c)
                    merges += 1
            break
        smallest = min(ineligible, key=lambda c: (int((labels == c).sum()), c))
        distances = [float(np.linalg.norm(centroids[c] - centroids[smallest])) for c in eligible]
        absorb(eligible[int(np.argmin(distances))], smallest)
        merges += 1

    if merges == 0:
        return clustering
    survivors = sorted(centroids)
    remap = {old: new for new, old in enumerate(survivors)}
    logger.info(f"Merged {merges} small cluster(s): K {clustering.k} -> {len(survivors)}")
    return Clustering(
        labels=np.array([remap[c] for c in labels], dtype=np.int64),
        centroids=np.vstack([centroids[c] for c in survivors]),
        outlier_clusters=frozenset(remap[c] for c in flagged),
        objective_trace=list(clustering.objective_trace)
    )
