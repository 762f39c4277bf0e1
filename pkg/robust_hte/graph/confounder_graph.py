"""Confounder graph construction from empirical covariate correlations."""

from pathlib import Path
from typing import Union, Optional
import logging

import networkx as nx
import numpy as np

from ..core.types import Dataset
from ..core.exceptions import DomainError, ShapeError, StorageError

logger = logging.getLogger(__name__)


class ConfounderGraph:
    """Undirected graph with one node per confounder and a feature row per node.

    Every node carries a self-loop, so each neighbourhood contains the node
    itself. Edges store the empirical correlation under the ``corr`` key.
    """

    def __init__(self, graph: nx.Graph, node_features: np.ndarray):
        node_features = np.array(node_features, dtype=np.float64, copy=True)
        if node_features.ndim != 2:
            raise ShapeError(
                f"Node features must be a p x f matrix, got {node_features.ndim}-d",
                actual=list(node_features.shape)
            )
        p = node_features.shape[0]
        if sorted(graph.nodes) != list(range(p)):
            raise ShapeError(
                f"Graph nodes must be 0..{p - 1} to match {p} feature rows",
                expected=[p],
                actual=[graph.number_of_nodes()]
            )
        missing = [i for i in range(p) if not graph.has_edge(i, i)]
        if missing:
            raise DomainError(f"Nodes without self-loop: {missing}", parameter="graph")
        node_features.setflags(write=False)
        self.graph = graph
        self.node_features = node_features
        self._adjacency: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return int(self.node_features.shape[0])

    @property
    def f(self) -> int:
        return int(self.node_features.shape[1])

    def adjacency_matrix(self) -> np.ndarray:
        """Boolean p x p adjacency including the diagonal."""
        if self._adjacency is None:
            adj = nx.to_numpy_array(self.graph, nodelist=range(self.p), weight=None) > 0
            adj.setflags(write=False)
            self._adjacency = adj
        return self._adjacency

    def neighbors(self, i: int) -> list:
        return sorted(self.graph.neighbors(i))

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray, node_features: np.ndarray) -> "ConfounderGraph":
        """Build a graph from a (possibly asymmetric) adjacency matrix.

        The edge set is symmetrised by union and self-loops are always added.
        """
        adjacency = np.asarray(adjacency) != 0
        p = adjacency.shape[0]
        if adjacency.shape != (p, p) or np.shape(node_features)[0] != p:
            raise ShapeError(
                f"Adjacency {adjacency.shape} does not match {np.shape(node_features)[0]} feature rows",
                expected=[p, p],
                actual=list(adjacency.shape)
            )
        graph = nx.Graph()
        graph.add_nodes_from(range(p))
        graph.add_edges_from((i, i, {"corr": 1.0}) for i in range(p))
        rows, cols = np.nonzero(adjacency | adjacency.T)
        graph.add_edges_from(
            (int(i), int(j), {"corr": float("nan")}) for i, j in zip(rows, cols) if i < j
        )
        return cls(graph, node_features)


def correlation_matrix(x: np.ndarray) -> np.ndarray:
    """Empirical correlation with zero-variance columns given zero correlation."""
    x = np.asarray(x, dtype=np.float64)
    std = x.std(axis=0)
    constant = std == 0
    if constant.any():
        logger.warning(
            f"Zero-variance covariates {np.flatnonzero(constant).tolist()} are isolated in the confounder graph"
        )
    centered = x - x.mean(axis=0)
    scale = np.where(constant, 1.0, std * np.sqrt(x.shape[0]))
    z = centered / scale
    corr = z.T @ z
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def build_graph(
    data: Union[Dataset, np.ndarray],
    threshold: float = 0.3,
    max_degree: int = 10
) -> ConfounderGraph:
    """Build the confounder graph from covariate correlations.

    Node i's features are row i of the correlation matrix. Edge (i, j) is kept
    when |corr| >= threshold and j is among the ``max_degree`` strongest
    neighbours of i (or i of j); self-loops are always present.

    Args:
        data: Dataset or raw n x p covariate matrix
        threshold: Minimum absolute correlation for an edge
        max_degree: Neighbour budget per node before symmetrisation

    Returns:
        ConfounderGraph with p nodes and f = p node features
    """
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise DomainError(
            f"Correlation graph needs at least 3 samples, got shape {x.shape}",
            parameter="n",
            value=x.shape[0] if x.ndim else 0
        )
    if max_degree < 1:
        raise DomainError(f"max_degree must be positive, got {max_degree}", parameter="max_degree", value=max_degree)

    corr = correlation_matrix(x)
    p = corr.shape[0]
    strength = np.abs(corr)
    np.fill_diagonal(strength, -np.inf)

    graph = nx.Graph()
    graph.add_nodes_from(range(p))
    graph.add_edges_from((i, i, {"corr": 1.0}) for i in range(p))
    for i in range(p):
        candidates = np.flatnonzero(strength[i] >= threshold)
        if candidates.size == 0:
            continue
        order = np.argsort(-strength[i, candidates], kind="stable")
        for j in candidates[order[:max_degree]]:
            graph.add_edge(i, int(j), corr=float(corr[i, j]))

    logger.info(
        f"Built confounder graph: p={p}, edges={graph.number_of_edges() - p} (excluding self-loops), "
        f"threshold={threshold}"
    )
    return ConfounderGraph(graph, corr)


def dump_edgelist(graph: ConfounderGraph, path: Union[str, Path]) -> None:
    """Write one ``i j corr`` line per edge with 1-based node ids."""
    relabeled = nx.relabel_nodes(graph.graph, {i: i + 1 for i in range(graph.p)})
    try:
        nx.write_edgelist(relabeled, str(path), data=["corr"])
    except OSError as e:
        raise StorageError(f"Could not write edge list to {path}: {e}", file_path=str(path)) from e
