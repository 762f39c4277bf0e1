"""Bias / MSE / MAE of per-sample effect estimates and their Monte Carlo summaries."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.exceptions import DomainError, ShapeError


@dataclass(frozen=True)
class Metrics:
    bias: float
    mse: float
    mae: float


@dataclass(frozen=True)
class MetricSummary:
    """Replication averages with Monte Carlo standard errors."""
    bias: float
    abs_bias: float
    mse: float
    mae: float
    bias_se: float
    mse_se: float
    mae_se: float
    replications: int


def metrics(tau_hat, tau_true) -> Metrics:
    """bias = mean(tau_hat - tau), mse = mean((tau_hat - tau)^2), mae = mean|tau_hat - tau|."""
    tau_hat = np.asarray(tau_hat, dtype=np.float64).reshape(-1)
    tau_true = np.asarray(tau_true, dtype=np.float64).reshape(-1)
    if tau_hat.shape != tau_true.shape:
        raise ShapeError(
            f"tau_hat has {tau_hat.size} entries, tau_true {tau_true.size}",
            expected=[tau_true.size],
            actual=[tau_hat.size]
        )
    if tau_hat.size == 0:
        raise DomainError("Metrics need at least one sample", parameter="tau_hat")
    error = tau_hat - tau_true
    return Metrics(
        bias=float(error.mean()),
        mse=float((error ** 2).mean()),
        mae=float(np.abs(error).mean())
    )


def _mc_se(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(values.size))


def summarize(results: Sequence[Metrics]) -> MetricSummary:
    """Average per-replication metrics; |bias| is taken after averaging."""
    if not results:
        raise DomainError("Cannot summarise zero replications", parameter="results")
    bias = np.array([m.bias for m in results])
    mse = np.array([m.mse for m in results])
    mae = np.array([m.mae for m in results])
    return MetricSummary(
        bias=float(bias.mean()),
        abs_bias=float(abs(bias.mean())),
        mse=float(mse.mean()),
        mae=float(mae.mean()),
        bias_se=_mc_se(bias),
        mse_se=_mc_se(mse),
        mae_se=_mc_se(mae),
        replications=len(results)
    )
