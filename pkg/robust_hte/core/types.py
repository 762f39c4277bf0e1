"""Type definitions and data models shared across the robust HTE toolkit."""

from typing import List, Optional, Iterator, FrozenSet, Literal
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Activation(str, Enum):
    """Elementwise nonlinearities available for the attention layer output."""
    ELU = "elu"
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


class MethodName(str, Enum):
    """Estimation methods known to the benchmark."""
    PROPOSED = "proposed"
    PLAIN_AIPW = "plain_aipw"
    IPW = "ipw"
    OR = "or"
    ORACLE = "oracle"  # returns the simulation truth; test harness only


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class ObservedSample(BaseModel):
    """One observed unit (y, delta, d, x)."""

    model_config = ConfigDict(frozen=True)

    y: float = Field(allow_inf_nan=False)
    delta: Literal[0, 1]
    d: Literal[0, 1]
    x: List[float]

    @field_validator("x")
    @classmethod
    def validate_covariates(cls, v):
        if not v:
            raise ValueError("covariate vector must be non-empty")
        if not all(np.isfinite(v)):
            raise ValueError("covariates must be finite")
        return v


class Dataset(BaseModel):
    """Columnar container of observed samples.

    ``x`` is an ``n x p`` matrix; ``truth`` optionally carries the per-unit true
    effect tau(x) when the data come from the simulator. Arrays are copied on
    construction and marked read-only.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    y: np.ndarray
    delta: np.ndarray
    d: np.ndarray
    x: np.ndarray
    truth: Optional[np.ndarray] = None

    @field_validator("y", "truth", mode="before")
    @classmethod
    def validate_real_vector(cls, v):
        if v is None:
            return v
        return np.array(v, dtype=np.float64, copy=True).reshape(-1)

    @field_validator("delta", "d", mode="before")
    @classmethod
    def validate_binary_vector(cls, v):
        arr = np.array(v, copy=True).reshape(-1)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("indicator columns must only contain 0 or 1")
        return arr.astype(np.int64)

    @field_validator("x", mode="before")
    @classmethod
    def validate_matrix(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ValueError(f"covariates must be a 2-d matrix, got {arr.ndim}-d")
        return arr

    @model_validator(mode="after")
    def validate_consistency(self):
        n = self.x.shape[0]
        if n == 0 or self.x.shape[1] == 0:
            raise ValueError("dataset must have n >= 1 and p >= 1")
        for name in ("y", "delta", "d"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"column {name} has {getattr(self, name).shape[0]} rows, expected {n}")
        if self.truth is not None and self.truth.shape[0] != n:
            raise ValueError(f"truth has {self.truth.shape[0]} entries, expected {n}")
        if not np.isfinite(self.x).all() or not np.isfinite(self.y).all():
            raise ValueError("y and x must be finite")
        for arr in (self.y, self.delta, self.d, self.x, self.truth):
            if arr is not None:
                _frozen(arr)
        return self

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def has_truth(self) -> bool:
        return self.truth is not None

    @property
    def samples(self) -> List[ObservedSample]:
        return list(self.iter_samples())

    def iter_samples(self) -> Iterator[ObservedSample]:
        for i in range(self.n):
            yield ObservedSample(
                y=float(self.y[i]),
                delta=int(self.delta[i]),
                d=int(self.d[i]),
                x=self.x[i].tolist()
            )

    @classmethod
    def from_samples(
        cls,
        samples: List[ObservedSample],
        truth: Optional[List[float]] = None
    ) -> "Dataset":
        """Build a dataset from row records; all rows must share p."""
        if not samples:
            raise ValueError("at least one sample is required")
        p = len(samples[0].x)
        if any(len(s.x) != p for s in samples):
            raise ValueError("all samples must share the same covariate dimension")
        return cls(
            y=[s.y for s in samples],
            delta=[s.delta for s in samples],
            d=[s.d for s in samples],
            x=[s.x for s in samples],
            truth=truth
        )


class RngState(BaseModel):
    """Seed plus counter-based substream identifier.

    The pair is the 128-bit key of a Philox generator, so equal states give the
    same draw sequence on every platform.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    stream: int = Field(0, ge=0, lt=2**64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream << 64)))


class LatentCode(BaseModel):
    """Latent posterior parameters and reparameterised draw for one sample."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mu: np.ndarray
    logvar: np.ndarray
    z: np.ndarray


class LatentCodes(BaseModel):
    """Batch of latent codes, one row per sample."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mu: np.ndarray
    logvar: np.ndarray
    z: np.ndarray

    @model_validator(mode="after")
    def validate_shapes(self):
        if not (self.mu.shape == self.logvar.shape == self.z.shape):
            raise ValueError("mu, logvar and z must share a shape")
        return self

    def __len__(self) -> int:
        return int(self.mu.shape[0])

    def __getitem__(self, i: int) -> LatentCode:
        return LatentCode(mu=self.mu[i], logvar=self.logvar[i], z=self.z[i])

    def __iter__(self) -> Iterator[LatentCode]:  # type: ignore[override]
        for i in range(len(self)):
            yield self[i]


class Clustering(BaseModel):
    """A hard partition of latent codes with outlier-origin cluster flags."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: np.ndarray
    centroids: np.ndarray
    outlier_clusters: FrozenSet[int] = frozenset()
    objective_trace: List[float] = Field(default_factory=list)

    @field_validator("labels", mode="before")
    @classmethod
    def validate_labels(cls, v):
        return np.array(v, dtype=np.int64, copy=True).reshape(-1)

    @field_validator("centroids", mode="before")
    @classmethod
    def validate_centroids(cls, v):
        arr = np.array(v, dtype=np.float64, copy=True)
        return arr.reshape(arr.shape[0], -1) if arr.ndim == 1 else arr

    @model_validator(mode="after")
    def validate_partition(self):
        k = self.centroids.shape[0]
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= k):
            raise ValueError(f"labels must lie in [0, {k})")
        sizes = np.bincount(self.labels, minlength=k)
        if (sizes == 0).any():
            raise ValueError(f"empty clusters: {np.flatnonzero(sizes == 0).tolist()}")
        if any(c < 0 or c >= k for c in self.outlier_clusters):
            raise ValueError("outlier cluster ids must be valid cluster ids")
        _frozen(self.labels)
        _frozen(self.centroids)
        return self

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)


class ClusterEffect(BaseModel):
    """Estimated treatment effect of one cluster with its diagnostics."""

    cluster_id: int
    tau_hat: float
    se_hat: float = Field(ge=0.0)
    n_k: int = Field(ge=0)
    n_treated: int = Field(ge=0)
    n_control: int = Field(ge=0)
    is_outlier_cluster: bool = False

    @model_validator(mode="after")
    def validate_counts(self):
        if self.n_treated + self.n_control != self.n_k:
            raise ValueError("n_treated + n_control must equal n_k")
        return self
