"""Joint full-batch training of the attention layer and the CVAE."""

from copy import deepcopy
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple
import logging

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from .cvae import CvaeModel, negative_elbo_tensor
from ..core.types import Dataset, LatentCodes, RngState
from ..core.rng import split_rng, root_state
from ..core.exceptions import DomainError, TrainingError
from ..graph.confounder_graph import ConfounderGraph
from ..graph.gat import DTYPE, GatLayer, embed_tensor, graph_tensors, init_gat_layer, relative_error

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Training configuration (full-batch, fixed step size)."""

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(500, ge=1)
    learning_rate: float = Field(1e-2, gt=0.0)
    kl_weight: float = Field(1.0, ge=0.0)
    latent_dim: int = Field(2, ge=1)
    hidden_dim: int = Field(16, ge=1)
    batch_mode: str = Field("full", pattern="^full$")
    seed: int = Field(42, ge=0, lt=2**64)
    # Fixed affine standardisation (median and MAD) of the encoder input,
    # computed once from the initial embeddings.
    standardize_inputs: bool = True
    train_gat: bool = True
    # Abort once the loss exceeds this multiple of max(initial loss, 1).
    divergence_factor: float = Field(1e3, gt=1.0)


@dataclass
class TrainResult:
    """Trained parameters, noise-free latent codes and the loss trace."""
    model: CvaeModel
    layer: GatLayer
    codes: LatentCodes
    inputs: np.ndarray
    loss_trace: List[float] = field(default_factory=list)


def robust_standardization(embedded: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Column-wise median and 1.4826 * MAD, falling back to the standard
    deviation and then to 1 where a column has no spread.

    Contaminated rows sit far out in the standardised coordinates instead
    of inflating the scale that the clean rows are measured on.
    """
    shift = torch.quantile(embedded, 0.5, dim=0)
    mad = 1.4826 * torch.quantile((embedded - shift).abs(), 0.5, dim=0)
    std = embedded.std(dim=0, unbiased=False)
    scale = torch.where(mad > 0, mad, torch.where(std > 0, std, torch.ones_like(std)))
    return shift, scale


class CvaeTrainer:
    """Fixed-step gradient descent on the mean negative ELBO.

    The reparameterisation noise of epoch ``k`` comes from the stream
    ``split_rng(rng, f"eps/{k}")``, so any epoch can be replayed exactly.
    The reconstruction target is the standardised embedding under the
    initial attention weights. It is a constant; the attention layer learns
    only through the encoder path.
    """

    def __init__(self, config: Optional[TrainConfig] = None, rng: Optional[RngState] = None):
        self.config = config or TrainConfig()
        self.rng = rng or root_state(self.config.seed)
        self.model: Optional[CvaeModel] = None
        self.layer: Optional[GatLayer] = None
        self.loss_trace: List[float] = []
        self._optimizer: Optional[torch.optim.Optimizer] = None

    def setup(self, ds: Dataset, graph: ConfounderGraph, layer: GatLayer) -> None:
        """Copy the layer, initialise the CVAE and freeze the data tensors."""
        if ds.n < 2:
            raise DomainError(f"Training needs n >= 2 samples, got {ds.n}", parameter="n", value=ds.n)
        self.layer = deepcopy(layer)
        self.model = CvaeModel.initialize(
            self.layer.out_dim,
            self.config.latent_dim,
            self.config.hidden_dim,
            split_rng(self.rng, "cvae-init")
        )
        self._features, self._mask = graph_tensors(graph)
        self._x = torch.as_tensor(np.array(ds.x), dtype=DTYPE)
        self._t = torch.as_tensor(np.array(ds.d, dtype=np.float64).reshape(-1, 1), dtype=DTYPE)

        with torch.no_grad():
            initial = embed_tensor(self._x, self.layer(self._features, self._mask))
        if self.config.standardize_inputs:
            self._shift, self._scale = robust_standardization(initial)
        else:
            self._shift = torch.zeros(initial.shape[1], dtype=DTYPE)
            self._scale = torch.ones(initial.shape[1], dtype=DTYPE)
        self._target = (initial - self._shift) / self._scale

        params = list(self.model.parameters())
        if self.config.train_gat:
            params += list(self.layer.parameters())
        else:
            self.layer.requires_grad_(False)
        self._optimizer = torch.optim.SGD(params, lr=self.config.learning_rate)
        self.loss_trace = []

    def _inputs(self) -> torch.Tensor:
        embedded = embed_tensor(self._x, self.layer(self._features, self._mask))
        return (embedded - self._shift) / self._scale

    def epoch_noise(self, epoch: int) -> np.ndarray:
        gen = split_rng(self.rng, f"eps/{epoch}").generator()
        return gen.standard_normal((self._x.shape[0], self.config.latent_dim))

    def loss(self, epoch: int) -> torch.Tensor:
        inputs = self._inputs()
        eps = torch.as_tensor(self.epoch_noise(epoch), dtype=DTYPE)
        loss, _, _ = negative_elbo_tensor(
            self.model, inputs, self._t, self._target, eps, self.config.kl_weight
        )
        return loss

    @property
    def target(self) -> np.ndarray:
        return self._target.numpy().copy()

    def trainable_parameters(self) -> List[torch.nn.Parameter]:
        return [p for group in self._optimizer.param_groups for p in group["params"]]

    def parameter_vector(self) -> np.ndarray:
        return torch.cat([p.detach().reshape(-1) for p in self.trainable_parameters()]).numpy().copy()

    def gradients(self, epoch: int) -> np.ndarray:
        """Flattened gradient at the current parameters, without stepping."""
        self._optimizer.zero_grad()
        self.loss(epoch).backward()
        grads = torch.cat([p.grad.reshape(-1) for p in self.trainable_parameters()]).numpy().copy()
        self._optimizer.zero_grad()
        return grads

    def step(self, epoch: int) -> float:
        """One full-batch update; returns the pre-update loss."""
        self._optimizer.zero_grad()
        loss = self.loss(epoch)
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingError(
                f"Loss is not finite at epoch {epoch}: {value}",
                epoch=epoch,
                loss_trace=self.loss_trace + [value]
            )
        if self.loss_trace:
            ceiling = self.config.divergence_factor * max(self.loss_trace[0], 1.0)
            if value > ceiling:
                raise TrainingError(
                    f"Loss diverged at epoch {epoch}: {value:.6g} exceeds {ceiling:.6g}",
                    epoch=epoch,
                    loss_trace=self.loss_trace + [value]
                )
        loss.backward()
        self._optimizer.step()
        self.loss_trace.append(value)
        return value

    def latent_codes(self) -> Tuple[LatentCodes, np.ndarray]:
        """Noise-free codes (z = mu) and the encoder inputs they came from."""
        with torch.no_grad():
            inputs = self._inputs()
            mu, logvar = self.model.encode_tensor(inputs, self._t)
        mu = mu.numpy().copy()
        return LatentCodes(mu=mu, logvar=logvar.numpy().copy(), z=mu.copy()), inputs.numpy().copy()

    def fit(self, ds: Dataset, graph: ConfounderGraph, layer: GatLayer) -> TrainResult:
        self.setup(ds, graph, layer)
        for epoch in range(self.config.epochs):
            loss = self.step(epoch)
            if epoch % 100 == 0:
                logger.debug(f"epoch {epoch}: loss={loss:.6f}")
        codes, inputs = self.latent_codes()
        logger.info(
            f"Trained CVAE for {self.config.epochs} epochs: "
            f"loss {self.loss_trace[0]:.4f} -> {self.loss_trace[-1]:.4f}"
        )
        return TrainResult(
            model=self.model,
            layer=self.layer,
            codes=codes,
            inputs=inputs,
            loss_trace=list(self.loss_trace)
        )


def train(
    ds: Dataset,
    graph: ConfounderGraph,
    layer: GatLayer,
    config: Optional[TrainConfig] = None,
    rng: Optional[RngState] = None
) -> TrainResult:
    """Train attention layer and CVAE jointly; see :class:`CvaeTrainer`."""
    return CvaeTrainer(config, rng).fit(ds, graph, layer)


def augment_codes(
    model: CvaeModel,
    inputs: np.ndarray,
    t: np.ndarray,
    count: int,
    rng: RngState
) -> np.ndarray:
    """``count`` extra reparameterised draws per sample, stacked draw-major."""
    if count <= 0:
        return np.empty((0, model.latent_dim))
    x_t = torch.as_tensor(np.asarray(inputs, dtype=np.float64), dtype=DTYPE)
    t_t = torch.as_tensor(np.asarray(t, dtype=np.float64).reshape(-1, 1), dtype=DTYPE)
    with torch.no_grad():
        mu, logvar = model.encode_tensor(x_t, t_t)
    mu, std = mu.numpy(), np.exp(0.5 * logvar.numpy())
    eps = rng.generator().standard_normal((count,) + mu.shape)
    return (mu[None] + std[None] * eps).reshape(-1, model.latent_dim)


@dataclass
class GradCheckInstance:
    """A small fixed problem for finite-difference gradient checks."""
    graph: ConfounderGraph
    x: np.ndarray
    d: np.ndarray
    eps: np.ndarray
    kl_weight: float = 1.0


def make_grad_check_instance(
    rng: RngState,
    p: int = 4,
    f: int = 3,
    q: int = 3,
    hidden_dim: int = 4,
    latent_dim: int = 2,
    n: int = 5
) -> Tuple[CvaeModel, GatLayer, GradCheckInstance]:
    """Random graph, data, noise and freshly initialised parameters."""
    gen = split_rng(rng, "instance").generator()
    upper = np.triu(gen.random((p, p)) < 0.5, k=1)
    graph = ConfounderGraph.from_adjacency(upper, gen.standard_normal((p, f)))
    instance = GradCheckInstance(
        graph=graph,
        x=gen.standard_normal((n, p)),
        d=gen.integers(0, 2, size=n),
        eps=gen.standard_normal((n, latent_dim))
    )
    layer = init_gat_layer(f, q, split_rng(rng, "gat"))
    model = CvaeModel.initialize(q, latent_dim, hidden_dim, split_rng(rng, "cvae"))
    return model, layer, instance


def grad_check(
    model: CvaeModel,
    layer: GatLayer,
    instance: GradCheckInstance,
    step: float = 1e-5,
    loss_scale: float = 1.0,
    corrupt: Optional[Callable[[Dict[str, np.ndarray]], None]] = None
) -> float:
    """Max relative error between analytic and central-difference gradients.

    The objective is ``loss_scale`` times the mean negative ELBO through
    embed_samples and the attention layer, with the noise and the
    reconstruction target frozen at the starting point. ``corrupt`` may edit
    the analytic gradients in place before comparison.
    """
    model, layer = deepcopy(model), deepcopy(layer)
    features, mask = graph_tensors(instance.graph)
    x = torch.as_tensor(np.asarray(instance.x, dtype=np.float64), dtype=DTYPE)
    t = torch.as_tensor(np.asarray(instance.d, dtype=np.float64).reshape(-1, 1), dtype=DTYPE)
    eps = torch.as_tensor(np.asarray(instance.eps, dtype=np.float64), dtype=DTYPE)
    with torch.no_grad():
        target = embed_tensor(x, layer(features, mask))

    def objective() -> torch.Tensor:
        inputs = embed_tensor(x, layer(features, mask))
        loss, _, _ = negative_elbo_tensor(model, inputs, t, target, eps, instance.kl_weight)
        return loss_scale * loss

    named = [(f"gat.{name}", p) for name, p in layer.named_parameters()]
    named += [(f"cvae.{name}", p) for name, p in model.named_parameters()]
    params = [p for _, p in named]
    analytic = {
        name: g.detach().numpy().copy()
        for (name, _), g in zip(named, torch.autograd.grad(objective(), params))
    }
    if corrupt is not None:
        corrupt(analytic)

    worst = 0.0
    for name, param in named:
        flat = param.data.view(-1)
        numeric = np.zeros(flat.shape[0])
        for idx in range(flat.shape[0]):
            original = flat[idx].item()
            flat[idx] = original + step
            with torch.no_grad():
                upper = objective().item()
            flat[idx] = original - step
            with torch.no_grad():
                lower = objective().item()
            flat[idx] = original
            numeric[idx] = (upper - lower) / (2 * step)
        worst = max(worst, relative_error(analytic[name], numeric))
    return worst
