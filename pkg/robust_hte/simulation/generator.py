"""Synthetic observational data with heterogeneous effects, censoring and contamination.

Covariates are equicorrelated Gaussians, treatment follows a logistic model
with interactions, potential event times are nonlinear in the covariates,
censoring times are exponential and a fraction of units get gross additive
noise on their recorded covariates. Treatment, outcomes and the true effect
are always computed from the clean covariates; contamination only corrupts
what is observed.
"""

from pathlib import Path
from typing import Optional, Tuple, Union
import json
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

from ..core.types import Dataset, RngState
from ..core.rng import split_rng, root_state
from ..core.exceptions import DomainError, ConfigurationError

logger = logging.getLogger(__name__)

MIN_COVARIATES = 5


class TreatmentCoefficients(BaseModel):
    """eta = b1*x1 + b2*x2 + b12*x1*x2 + b33*x3^2 + offset."""
    b1: float = 0.4
    b2: float = -0.4
    b12: float = 0.5
    b33: float = 0.3
    offset: float = -0.3


class OutcomeCoefficients(BaseModel):
    """Baseline mu0 and effect tau of the potential event times."""
    # mu0(x) = a0 + a1*x1 + a2*sin(x2) + a34*x3*x4
    a0: float = 1.0
    a1: float = 0.5
    a2: float = 0.5
    a34: float = 0.25
    # tau(x) = t0 + t1*x1 + t2*I(x2 > 0)
    t0: float = 1.0
    t1: float = 0.8
    t2: float = 0.6
    noise_sd: float = Field(0.5, ge=0.0)


class DgpCoefficients(BaseModel):
    """All coefficient sets of the data-generating process."""
    treatment: TreatmentCoefficients = Field(default_factory=TreatmentCoefficients)
    outcome: OutcomeCoefficients = Field(default_factory=OutcomeCoefficients)


def load_dgp_coefficients(path: Union[str, Path]) -> DgpCoefficients:
    """Read coefficient overrides from a JSON file; unspecified values keep defaults."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return DgpCoefficients.model_validate(json.load(f))
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Invalid DGP config {path}: {e}", config_key="dgp_config") from e


class SimConfig(BaseModel):
    """Configuration of one simulated dataset.

    ``censor_rate = 0`` switches censoring off (every event observed).
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    p: int = Field(100, ge=MIN_COVARIATES)
    rho: float = Field(0.3, ge=0.0, lt=1.0)
    contamination_ratio: float = Field(0.0, ge=0.0, lt=1.0)
    noise_scale: float = Field(5.0, gt=0.0)
    censor_rate: float = Field(0.1, ge=0.0)
    seed: int = Field(42, ge=0, lt=2**64)
    coefficients: DgpCoefficients = Field(default_factory=DgpCoefficients)

    @field_validator("censor_rate")
    @classmethod
    def validate_censor_rate(cls, v):
        if not np.isfinite(v):
            raise ValueError("censor_rate must be finite")
        return v


class PotentialOutcomes(BaseModel):
    """Columnar potential event times; entry i belongs to unit i."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t0: np.ndarray
    t1: np.ndarray
    tau: np.ndarray

    def __len__(self) -> int:
        return int(self.tau.shape[0])


class Simulation(BaseModel):
    """A generated dataset plus the ground truth behind it."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dataset: Dataset
    clean_covariates: np.ndarray
    contaminated_rows: np.ndarray
    propensity: np.ndarray
    outcomes: PotentialOutcomes
    censoring_times: Optional[np.ndarray] = None


def _require_covariates(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < MIN_COVARIATES:
        raise DomainError(
            f"Need an n x p covariate matrix with p >= {MIN_COVARIATES}, got shape {x.shape}",
            parameter="x",
            value=list(x.shape)
        )
    return x


def gen_covariates(cfg: SimConfig, rng: RngState) -> np.ndarray:
    """Draw n rows from N(0, Sigma), Sigma_jj = 1, Sigma_jk = rho.

    Uses the one-factor form x = sqrt(rho)*g + sqrt(1-rho)*e.
    """
    gen = rng.generator()
    g = gen.standard_normal(cfg.n)
    e = gen.standard_normal((cfg.n, cfg.p))
    return np.sqrt(cfg.rho) * g[:, None] + np.sqrt(1.0 - cfg.rho) * e


def treatment_propensity(x: np.ndarray, coefs: Optional[TreatmentCoefficients] = None) -> np.ndarray:
    """True P(D=1 | x) under the logistic assignment model."""
    x = _require_covariates(x)
    c = coefs or TreatmentCoefficients()
    eta = (
        c.b1 * x[:, 0]
        + c.b2 * x[:, 1]
        + c.b12 * x[:, 0] * x[:, 1]
        + c.b33 * x[:, 2] ** 2
        + c.offset
    )
    return expit(eta)


def gen_treatment(
    x: np.ndarray,
    rng: RngState,
    coefs: Optional[TreatmentCoefficients] = None
) -> np.ndarray:
    """Bernoulli treatment draws from the logistic assignment model."""
    prob = treatment_propensity(x, coefs)
    return (rng.generator().random(prob.shape[0]) < prob).astype(np.int64)


def effect_function(x: np.ndarray, coefs: Optional[OutcomeCoefficients] = None) -> np.ndarray:
    """True individual effect tau(x)."""
    x = _require_covariates(x)
    c = coefs or OutcomeCoefficients()
    return c.t0 + c.t1 * x[:, 0] + c.t2 * (x[:, 1] > 0)


def baseline_function(x: np.ndarray, coefs: Optional[OutcomeCoefficients] = None) -> np.ndarray:
    """Control-arm mean event time mu0(x)."""
    x = _require_covariates(x)
    c = coefs or OutcomeCoefficients()
    return c.a0 + c.a1 * x[:, 0] + c.a2 * np.sin(x[:, 1]) + c.a34 * x[:, 2] * x[:, 3]


def gen_outcomes(
    x: np.ndarray,
    rng: RngState,
    coefs: Optional[OutcomeCoefficients] = None
) -> PotentialOutcomes:
    """Potential event times T(0) = mu0 + e0 and T(1) = mu0 + tau + e1."""
    c = coefs or OutcomeCoefficients()
    mu0 = baseline_function(x, c)
    tau = effect_function(x, c)
    noise = rng.generator().normal(0.0, 1.0, size=(2, mu0.shape[0])) * c.noise_sd
    return PotentialOutcomes(t0=mu0 + noise[0], t1=mu0 + tau + noise[1], tau=tau)


def gen_censoring(n: int, rate: float, rng: RngState) -> np.ndarray:
    """I.i.d. Exponential(rate) censoring times."""
    if not rate > 0:
        raise DomainError(f"Censoring rate must be positive, got {rate}", parameter="rate", value=rate)
    return rng.generator().exponential(1.0 / rate, size=n)


def contaminate(
    x: np.ndarray,
    ratio: float,
    scale: float,
    rng: RngState
) -> Tuple[np.ndarray, np.ndarray]:
    """Add N(0, scale^2) noise to every covariate of floor(ratio*n) random rows.

    Returns:
        The contaminated copy of ``x`` and the sorted indices of altered rows
    """
    if not 0.0 <= ratio < 1.0:
        raise DomainError(f"Contamination ratio must lie in [0, 1), got {ratio}", parameter="ratio", value=ratio)
    out = np.array(x, dtype=np.float64, copy=True)
    n = out.shape[0]
    count = int(np.floor(ratio * n + 1e-9))
    if count == 0:
        return out, np.empty(0, dtype=np.int64)
    gen = rng.generator()
    rows = np.sort(gen.choice(n, size=count, replace=False))
    out[rows] += gen.normal(0.0, scale, size=(count, out.shape[1]))
    return out, rows.astype(np.int64)


def simulate(cfg: SimConfig, rng: Optional[RngState] = None) -> Simulation:
    """Generate a dataset together with its ground truth.

    Contamination is measurement noise on the observed covariates only.
    Treatment and the potential outcomes are drawn from the
    clean covariates, so changing the contamination ratio leaves d, y and
    tau unchanged for a given seed.

    Args:
        cfg: Simulation configuration
        rng: Root stream; defaults to ``cfg.seed``

    Returns:
        Simulation with the observed dataset and the generating quantities
    """
    root = rng or root_state(cfg.seed)
    coefs = cfg.coefficients

    clean = gen_covariates(cfg, split_rng(root, "covariates"))
    observed, rows = contaminate(
        clean, cfg.contamination_ratio, cfg.noise_scale, split_rng(root, "contamination")
    )
    propensity = treatment_propensity(clean, coefs.treatment)
    d = gen_treatment(clean, split_rng(root, "treatment"), coefs.treatment)
    outcomes = gen_outcomes(clean, split_rng(root, "outcomes"), coefs.outcome)
    event = np.where(d == 1, outcomes.t1, outcomes.t0)

    censoring = None
    if cfg.censor_rate > 0:
        censoring = gen_censoring(cfg.n, cfg.censor_rate, split_rng(root, "censoring"))
        y = np.minimum(event, censoring)
        delta = (event <= censoring).astype(np.int64)
    else:
        y = event
        delta = np.ones(cfg.n, dtype=np.int64)

    dataset = Dataset(y=y, delta=delta, d=d, x=observed, truth=outcomes.tau)
    logger.debug(
        f"Simulated n={cfg.n}, p={cfg.p}, contaminated={rows.size}, "
        f"treated={int(d.sum())}, censored={int(cfg.n - delta.sum())}"
    )
    return Simulation(
        dataset=dataset,
        clean_covariates=clean,
        contaminated_rows=rows,
        propensity=propensity,
        outcomes=outcomes,
        censoring_times=censoring
    )


def gen_dataset(cfg: SimConfig, rng: Optional[RngState] = None) -> Dataset:
    """Generate the observed dataset (y, delta, d, x) with per-unit truth.

    ``x`` is the contaminated matrix; d and y come from the clean covariates
    (see :func:`simulate`).
    """
    return simulate(cfg, rng).dataset
