"""Conditional VAE encoding of structure-aware sample representations."""

from .cvae import (
    CvaeModel,
    ElboBreakdown,
    encode,
    decode,
    elbo,
    kl_divergence,
    negative_elbo_tensor,
)
from .trainer import (
    TrainConfig,
    TrainResult,
    CvaeTrainer,
    train,
    robust_standardization,
    augment_codes,
    GradCheckInstance,
    make_grad_check_instance,
    grad_check,
)

__all__ = [
    "CvaeModel",
    "ElboBreakdown",
    "encode",
    "decode",
    "elbo",
    "kl_divergence",
    "negative_elbo_tensor",
    "TrainConfig",
    "TrainResult",
    "CvaeTrainer",
    "train",
    "robust_standardization",
    "augment_codes",
    "GradCheckInstance",
    "make_grad_check_instance",
    "grad_check",
]
