"""Confounder graph construction and graph attention embeddings."""

from .confounder_graph import ConfounderGraph, build_graph, correlation_matrix, dump_edgelist
from .gat import (
    GatLayer,
    GatGradients,
    init_gat_layer,
    attention_weights,
    gat_forward,
    gat_grad,
    gat_grad_check,
    embed_samples,
    relative_error,
)

__all__ = [
    "ConfounderGraph",
    "build_graph",
    "correlation_matrix",
    "dump_edgelist",
    "GatLayer",
    "GatGradients",
    "init_gat_layer",
    "attention_weights",
    "gat_forward",
    "gat_grad",
    "gat_grad_check",
    "embed_samples",
    "relative_error",
]
