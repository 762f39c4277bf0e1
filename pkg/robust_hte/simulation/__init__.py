"""Simulation of censored observational data with contaminated covariates."""

from .generator import (
    SimConfig,
    DgpCoefficients,
    TreatmentCoefficients,
    OutcomeCoefficients,
    PotentialOutcomes,
    Simulation,
    load_dgp_coefficients,
    gen_covariates,
    gen_treatment,
    treatment_propensity,
    gen_outcomes,
    effect_function,
    baseline_function,
    gen_censoring,
    contaminate,
    simulate,
    gen_dataset,
)

__all__ = [
    "SimConfig",
    "DgpCoefficients",
    "TreatmentCoefficients",
    "OutcomeCoefficients",
    "PotentialOutcomes",
    "Simulation",
    "load_dgp_coefficients",
    "gen_covariates",
    "gen_treatment",
    "treatment_propensity",
    "gen_outcomes",
    "effect_function",
    "baseline_function",
    "gen_censoring",
    "contaminate",
    "simulate",
    "gen_dataset",
]
