"""Conditional variational autoencoder over structure-aware sample representations.

Encoder q(z | x, t) = N(mu(x, t), diag(exp(logvar(x, t)))) and decoder mean
g(z, t) are two-layer tanh perceptrons. The prior p(z | t) is N(0, I) and the
likelihood is Gaussian with unit variance, so

    -ELBO = 1/2 ||x - g(z, t)||^2 + beta * KL(q || p)   (+ const)

with a single reparameterised draw z = mu + exp(logvar / 2) * eps.
"""

from dataclasses import dataclass
from typing import Optional, Union
import logging

import numpy as np
import torch
import torch.nn as nn

from ..core.types import LatentCode, LatentCodes, RngState
from ..core.exceptions import ShapeError, TrainingError
from ..graph.gat import DTYPE, glorot_uniform

logger = logging.getLogger(__name__)

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0


class CvaeModel(nn.Module):
    """Encoder (q+1 -> m -> 2l) and decoder (l+1 -> m -> q) parameters."""

    def __init__(self, input_dim: int, latent_dim: int = 2, hidden_dim: int = 16):
        super().__init__()
        if min(input_dim, latent_dim, hidden_dim) < 1:
            raise ShapeError(
                f"CVAE dims must be positive, got q={input_dim}, l={latent_dim}, m={hidden_dim}",
                actual=[input_dim, latent_dim, hidden_dim]
            )
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.hidden_dim = hidden_dim
        self.enc_hidden = nn.Linear(input_dim + 1, hidden_dim, dtype=DTYPE)
        self.enc_out = nn.Linear(hidden_dim, 2 * latent_dim, dtype=DTYPE)
        self.dec_hidden = nn.Linear(latent_dim + 1, hidden_dim, dtype=DTYPE)
        self.dec_out = nn.Linear(hidden_dim, input_dim, dtype=DTYPE)

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        latent_dim: int,
        hidden_dim: int,
        rng: RngState
    ) -> "CvaeModel":
        """Glorot-uniform weights drawn from ``rng``, zero biases."""
        model = cls(input_dim, latent_dim, hidden_dim)
        gen = rng.generator()
        with torch.no_grad():
            for layer in (model.enc_hidden, model.enc_out, model.dec_hidden, model.dec_out):
                fan_out, fan_in = layer.weight.shape
                layer.weight.copy_(glorot_uniform((fan_out, fan_in), fan_in, fan_out, gen))
                layer.bias.zero_()
        return model

    def encode_tensor(self, x: torch.Tensor, t: torch.Tensor) -> tuple:
        hidden = torch.tanh(self.enc_hidden(torch.cat([x, t], dim=1)))
        out = self.enc_out(hidden)
        mu = out[:, :self.latent_dim]
        logvar = torch.clamp(out[:, self.latent_dim:], LOGVAR_MIN, LOGVAR_MAX)
        return mu, logvar

    def decode_tensor(self, z: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        hidden = torch.tanh(self.dec_hidden(torch.cat([z, t], dim=1)))
        return self.dec_out(hidden)


@dataclass(frozen=True)
class ElboBreakdown:
    """Minimised loss (negative ELBO) and its per-sample mean terms."""
    loss: float
    reconstruction: float
    kl: float
    kl_weight: float


def _batch(x: np.ndarray, t: Union[int, np.ndarray], width: int, name: str) -> tuple:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != width:
        raise ShapeError(
            f"{name} has {x.shape[1]} columns, model expects {width}",
            expected=[width],
            actual=[x.shape[1]]
        )
    t = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1), (x.shape[0],))
    return (
        torch.as_tensor(x.copy(), dtype=DTYPE),
        torch.as_tensor(t.reshape(-1, 1).copy(), dtype=DTYPE),
        single
    )


def kl_tensor(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """Per-sample KL(N(mu, diag(exp(logvar))) || N(0, I))."""
    return 0.5 * (torch.exp(logvar) + mu ** 2 - 1.0 - logvar).sum(dim=1)


def kl_divergence(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    """Closed-form Gaussian KL against the standard normal prior."""
    mu = np.atleast_2d(np.asarray(mu, dtype=np.float64))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=np.float64))
    return 0.5 * (np.exp(logvar) + mu ** 2 - 1.0 - logvar).sum(axis=1)


def negative_elbo_tensor(
    model: CvaeModel,
    inputs: torch.Tensor,
    t: torch.Tensor,
    target: torch.Tensor,
    eps: torch.Tensor,
    kl_weight: float = 1.0
) -> tuple:
    """Mean negative ELBO with its reconstruction and KL parts (tensors)."""
    mu, logvar = model.encode_tensor(inputs, t)
    z = mu + torch.exp(0.5 * logvar) * eps
    recon = model.decode_tensor(z, t)
    reconstruction = 0.5 * ((target - recon) ** 2).sum(dim=1).mean()
    kl = kl_tensor(mu, logvar).mean()
    return reconstruction + kl_weight * kl, reconstruction, kl


def encode(
    model: CvaeModel,
    x: np.ndarray,
    t: Union[int, np.ndarray],
    rng: Optional[RngState] = None,
    eps: Optional[np.ndarray] = None
) -> Union[LatentCode, LatentCodes]:
    """Encode representations and treatment bits into latent codes.

    ``z`` uses ``eps`` when given, otherwise a standard-normal draw from ``rng``;
    with neither, ``z = mu``. A 1-d input returns a single LatentCode.
    """
    x_t, t_t, single = _batch(x, t, model.input_dim, "input")
    with torch.no_grad():
        mu, logvar = model.encode_tensor(x_t, t_t)
    mu, logvar = mu.numpy().copy(), logvar.numpy().copy()
    if eps is None:
        eps = rng.generator().standard_normal(mu.shape) if rng is not None else np.zeros_like(mu)
    eps = np.asarray(eps, dtype=np.float64).reshape(mu.shape)
    z = mu + np.exp(0.5 * logvar) * eps
    if single:
        return LatentCode(mu=mu[0], logvar=logvar[0], z=z[0])
    return LatentCodes(mu=mu, logvar=logvar, z=z)


def decode(model: CvaeModel, z: np.ndarray, t: Union[int, np.ndarray]) -> np.ndarray:
    """Reconstruction mean for latent vectors and treatment bits."""
    z_t, t_t, single = _batch(z, t, model.latent_dim, "latent vector")
    with torch.no_grad():
        out = model.decode_tensor(z_t, t_t).numpy().copy()
    return out[0] if single else out


def elbo(
    model: CvaeModel,
    x: np.ndarray,
    t: Union[int, np.ndarray],
    x_target: np.ndarray,
    eps: Optional[np.ndarray] = None,
    rng: Optional[RngState] = None,
    kl_weight: float = 1.0,
    epoch: Optional[int] = None
) -> ElboBreakdown:
    """Negative ELBO of a batch (mean over samples) with its breakdown.

    Raises:
        TrainingError: the loss is not finite
    """
    x_t, t_t, _ = _batch(x, t, model.input_dim, "input")
    target_t, _, _ = _batch(x_target, t, model.input_dim, "target")
    shape = (x_t.shape[0], model.latent_dim)
    if eps is None:
        eps = rng.generator().standard_normal(shape) if rng is not None else np.zeros(shape)
    eps_t = torch.as_tensor(np.asarray(eps, dtype=np.float64).reshape(shape), dtype=DTYPE)
    with torch.no_grad():
        loss, reconstruction, kl = negative_elbo_tensor(model, x_t, t_t, target_t, eps_t, kl_weight)
    if not torch.isfinite(loss):
        raise TrainingError(f"Non-finite ELBO loss {loss.item()}", epoch=epoch)
    return ElboBreakdown(
        loss=loss.item(),
        reconstruction=reconstruction.item(),
        kl=kl.item(),
        kl_weight=kl_weight
    )
