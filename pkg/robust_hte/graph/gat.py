"""Single-head graph attention over the confounder graph.

For node i with neighbourhood N(i) (self-loop included):

    e_ij     = LeakyReLU(a^T [W h_i || W h_j])
    alpha_ij = softmax_j over N(i) of e_ij
    h'_i     = sigma(sum_j alpha_ij W h_j)

Parameters live in a float64 torch module so the same forward pass serves
inference, analytic gradients and joint training with the CVAE.
"""

from dataclasses import dataclass
from typing import Union
import logging

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .confounder_graph import ConfounderGraph
from ..core.types import Activation, Dataset, RngState
from ..core.exceptions import ShapeError

logger = logging.getLogger(__name__)

DTYPE = torch.float64


def _as_tensor(value: Union[np.ndarray, torch.Tensor]) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value.detach().to(DTYPE).clone()
    return torch.as_tensor(np.array(value, dtype=np.float64))


def glorot_uniform(shape: tuple, fan_in: int, fan_out: int, rng: np.random.Generator) -> torch.Tensor:
    """Uniform draw in +/- sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return torch.as_tensor(rng.uniform(-limit, limit, size=shape), dtype=DTYPE)


class GatLayer(nn.Module):
    """Attention layer parameters: W (f_out x f) and a (2 f_out)."""

    def __init__(
        self,
        W: Union[np.ndarray, torch.Tensor],
        a: Union[np.ndarray, torch.Tensor],
        leaky_slope: float = 0.2,
        activation: Activation = Activation.ELU
    ):
        super().__init__()
        W = _as_tensor(W)
        a = _as_tensor(a).reshape(-1)
        if W.ndim != 2 or W.shape[0] < 1:
            raise ShapeError(f"W must be f_out x f with f_out >= 1, got {tuple(W.shape)}", actual=list(W.shape))
        if a.shape[0] != 2 * W.shape[0]:
            raise ShapeError(
                f"Attention vector has length {a.shape[0]}, expected 2 * f_out = {2 * W.shape[0]}",
                expected=[2 * W.shape[0]],
                actual=[a.shape[0]]
            )
        if not (torch.isfinite(W).all() and torch.isfinite(a).all()):
            raise ValueError("GAT parameters must be finite")
        self.W = nn.Parameter(W)
        self.a = nn.Parameter(a)
        self.leaky_slope = float(leaky_slope)
        self.activation = Activation(activation)

    @property
    def in_dim(self) -> int:
        return int(self.W.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.W.shape[0])

    def sigma(self, h: torch.Tensor) -> torch.Tensor:
        if self.activation == Activation.ELU:
            return F.elu(h)
        if self.activation == Activation.RELU:
            return F.relu(h)
        if self.activation == Activation.TANH:
            return torch.tanh(h)
        return h

    def attention(self, features: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Row-stochastic p x p attention matrix; zero outside the neighbourhood."""
        wh = features @ self.W.T
        f_out = self.out_dim
        scores = (wh @ self.a[:f_out]).unsqueeze(1) + (wh @ self.a[f_out:]).unsqueeze(0)
        scores = F.leaky_relu(scores, negative_slope=self.leaky_slope)
        scores = scores.masked_fill(~mask, float("-inf"))
        return torch.softmax(scores, dim=1)

    def forward(self, features: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        alpha = self.attention(features, mask)
        return self.sigma(alpha @ (features @ self.W.T))


def init_gat_layer(
    in_dim: int,
    out_dim: int,
    rng: RngState,
    leaky_slope: float = 0.2,
    activation: Activation = Activation.ELU
) -> GatLayer:
    """Glorot-uniform initialised layer drawn from ``rng``."""
    gen = rng.generator()
    W = glorot_uniform((out_dim, in_dim), in_dim, out_dim, gen)
    a = glorot_uniform((2 * out_dim,), 2 * out_dim, 1, gen)
    return GatLayer(W, a, leaky_slope=leaky_slope, activation=activation)


@dataclass(frozen=True)
class GatGradients:
    """Gradients of a scalar objective with respect to the layer parameters."""
    W: np.ndarray
    a: np.ndarray


def _check_dims(graph: ConfounderGraph, layer: GatLayer) -> None:
    if graph.f != layer.in_dim:
        raise ShapeError(
            f"Node features have f={graph.f} columns but W expects f={layer.in_dim}",
            expected=[layer.in_dim],
            actual=[graph.f]
        )


def graph_tensors(graph: ConfounderGraph) -> tuple:
    """Node features and boolean neighbourhood mask as torch tensors."""
    return (
        torch.as_tensor(np.array(graph.node_features), dtype=DTYPE),
        torch.as_tensor(np.array(graph.adjacency_matrix()), dtype=torch.bool)
    )


def attention_weights(graph: ConfounderGraph, layer: GatLayer) -> np.ndarray:
    """The p x p matrix of alpha_ij (rows sum to one)."""
    _check_dims(graph, layer)
    features, mask = graph_tensors(graph)
    with torch.no_grad():
        return layer.attention(features, mask).numpy()


def gat_forward(graph: ConfounderGraph, layer: GatLayer) -> np.ndarray:
    """Node embeddings h' (p x f_out)."""
    _check_dims(graph, layer)
    features, mask = graph_tensors(graph)
    with torch.no_grad():
        return layer(features, mask).numpy()


def gat_grad(graph: ConfounderGraph, layer: GatLayer, upstream: np.ndarray) -> GatGradients:
    """Reverse-mode gradients of <upstream, h'> with respect to W and a."""
    _check_dims(graph, layer)
    upstream = np.asarray(upstream, dtype=np.float64)
    expected = (graph.p, layer.out_dim)
    if upstream.shape != expected:
        raise ShapeError(
            f"Upstream has shape {upstream.shape}, expected {expected}",
            expected=list(expected),
            actual=list(upstream.shape)
        )
    features, mask = graph_tensors(graph)
    objective = (layer(features, mask) * torch.as_tensor(upstream, dtype=DTYPE)).sum()
    grad_w, grad_a = torch.autograd.grad(objective, [layer.W, layer.a], allow_unused=False)
    return GatGradients(W=grad_w.detach().numpy().copy(), a=grad_a.detach().numpy().copy())


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(|a|, |n|, floor)."""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def gat_grad_check(
    graph: ConfounderGraph,
    layer: GatLayer,
    upstream: np.ndarray,
    step: float = 1e-5
) -> float:
    """Compare :func:`gat_grad` against central finite differences."""
    grads = gat_grad(graph, layer, upstream)
    features, mask = graph_tensors(graph)
    weight = torch.as_tensor(np.asarray(upstream, dtype=np.float64), dtype=DTYPE)
    errors = []
    for param, analytic in ((layer.W, grads.W), (layer.a, grads.a)):
        numeric = np.zeros_like(analytic)
        flat = param.data.view(-1)
        for idx in range(flat.shape[0]):
            original = flat[idx].item()
            values = []
            for shift in (step, -step):
                flat[idx] = original + shift
                with torch.no_grad():
                    values.append((layer(features, mask) * weight).sum().item())
            flat[idx] = original
            numeric.reshape(-1)[idx] = (values[0] - values[1]) / (2 * step)
        errors.append(relative_error(analytic, numeric))
    return max(errors)


def embed_tensor(x: torch.Tensor, node_embeddings: torch.Tensor) -> torch.Tensor:
    """Sample representations X H' / p (differentiable)."""
    return x @ node_embeddings / node_embeddings.shape[0]


def embed_samples(
    data: Union[Dataset, np.ndarray],
    graph: ConfounderGraph,
    layer: GatLayer
) -> np.ndarray:
    """Project each sample's covariates through the node embeddings.

    Returns:
        n x q matrix X H' / p with q = f_out
    """
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != graph.p:
        raise ShapeError(
            f"Covariates have shape {x.shape} but the graph has p={graph.p} nodes",
            expected=[graph.p],
            actual=list(x.shape)
        )
    h = gat_forward(graph, layer)
    return x @ h / graph.p
