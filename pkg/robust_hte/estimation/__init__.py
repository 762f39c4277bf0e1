"""Propensity and outcome models and clusterwise effect estimators."""

from .propensity import PropensityModel, fit_propensity, with_intercept
from .outcome import (
    ArmFit,
    OutcomeModel,
    fit_outcome,
    fit_arm,
    robust_scale,
    huber_weights,
    huber_clip,
)
from .effects import (
    EstimationConfig,
    EstimationResult,
    bootstrap_se,
    dr_terms,
    tau_dr,
    tau_plain_aipw,
    tau_ipw,
    tau_or,
    combine_effects,
    estimate_all,
)

__all__ = [
    "PropensityModel",
    "fit_propensity",
    "with_intercept",
    "ArmFit",
    "OutcomeModel",
    "fit_outcome",
    "fit_arm",
    "robust_scale",
    "huber_weights",
    "huber_clip",
    "EstimationConfig",
    "EstimationResult",
    "bootstrap_se",
    "dr_terms",
    "tau_dr",
    "tau_plain_aipw",
    "tau_ipw",
    "tau_or",
    "combine_effects",
    "estimate_all",
]
