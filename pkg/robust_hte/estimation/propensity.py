"""Covariate-balancing logistic propensity scores."""

from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np
from scipy.special import expit

from ..core.exceptions import DomainError, EstimationError, ShapeError

logger = logging.getLogger(__name__)

MAX_COEFFICIENT = 25.0
FALLBACK_PENALTY = 1e-2


def with_intercept(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    return np.hstack([np.ones((features.shape[0], 1)), features])


@dataclass(frozen=True)
class PropensityModel:
    """Logistic propensity e(x) = expit(b0 + x'b), scores trimmed to [trim, 1 - trim]."""

    coefficients: np.ndarray
    trim: float = 0.05
    penalty: float = 0.0
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if coefficients.size < 1 or not np.isfinite(coefficients).all():
            raise DomainError("Propensity coefficients must be finite and non-empty", parameter="coefficients")
        if not 0.0 <= self.trim < 0.5:
            raise DomainError(f"trim must lie in [0, 0.5), got {self.trim}", parameter="trim", value=self.trim)
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def constant(cls, score: float, dim: int, trim: float = 0.05) -> "PropensityModel":
        """A model returning ``score`` for every unit, ignoring the features."""
        coefficients = np.zeros(dim + 1)
        coefficients[0] = np.log(score / (1.0 - score))
        return cls(coefficients=coefficients, trim=trim)

    def raw_scores(self, features: np.ndarray) -> np.ndarray:
        design = with_intercept(features)
        if design.shape[1] != self.coefficients.size:
            raise ShapeError(
                f"Features have {design.shape[1] - 1} columns, model expects {self.coefficients.size - 1}",
                expected=[self.coefficients.size - 1],
                actual=[design.shape[1] - 1]
            )
        return expit(design @ self.coefficients)

    def scores(self, features: np.ndarray) -> np.ndarray:
        return np.clip(self.raw_scores(features), self.trim, 1.0 - self.trim)


def _penalty_matrix(dim: int, penalty: float) -> np.ndarray:
    # the intercept is never penalised
    diag = np.full(dim, penalty)
    diag[0] = 0.0
    return np.diag(diag)


def _log_likelihood(design: np.ndarray, d: np.ndarray, beta: np.ndarray, penalty: float) -> float:
    eta = design @ beta
    return float(d @ eta - np.logaddexp(0.0, eta).sum() - 0.5 * penalty * (beta[1:] @ beta[1:]))


def _newton(
    design: np.ndarray,
    d: np.ndarray,
    penalty: float,
    max_iterations: int,
    tol: float
) -> tuple:
    beta = np.zeros(design.shape[1])
    P = _penalty_matrix(design.shape[1], penalty)
    current = _log_likelihood(design, d, beta, penalty)
    for iteration in range(1, max_iterations + 1):
        e = expit(design @ beta)
        gradient = design.T @ (d - e) - P @ beta
        if np.linalg.norm(gradient) < tol:
            return beta, iteration - 1, True
        hessian = (design * (e * (1.0 - e))[:, None]).T @ design + P
        try:
            step = np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            return beta, iteration, False
        # step halving keeps the (penalised) likelihood increasing
        scale = 1.0
        for _ in range(30):
            candidate = beta + scale * step
            value = _log_likelihood(design, d, candidate, penalty)
            if value >= current:
                break
            scale *= 0.5
        beta, current = candidate, value
        if np.linalg.norm(scale * step) < 1e-14 * (1.0 + np.linalg.norm(beta)):
            # stalled at round-off level
            return beta, iteration, True
        if penalty == 0.0 and np.abs(beta).max() > MAX_COEFFICIENT:
            return beta, iteration, False
    e = expit(design @ beta)
    converged = np.linalg.norm(design.T @ (d - e) - P @ beta) < tol
    return beta, max_iterations, bool(converged)


def fit_propensity(
    features: np.ndarray,
    d: np.ndarray,
    trim: float = 0.05,
    max_iterations: int = 100,
    tol: float = 1e-8,
    penalty: Optional[float] = None
) -> PropensityModel:
    """Fit a logistic propensity by solving the balance equations.

    Newton iterations solve sum_i (d_i - e(x_i)) (1, x_i) = 0, which is the
    logistic score, so the fitted scores balance every feature between the
    arms. When Newton diverges (perfect separation) the fit is repeated with
    a 1e-2 ridge penalty on the slopes and a warning is logged.

    Args:
        features: n x r feature matrix (latent codes or raw covariates)
        d: Binary treatment vector
        trim: Scores are clipped to [trim, 1 - trim]
        penalty: Force a penalised fit with this ridge weight

    Raises:
        DomainError: an arm is empty
        EstimationError: even the penalised fit fails
    """
    design = with_intercept(features)
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    if d.shape[0] != design.shape[0]:
        raise ShapeError(
            f"d has {d.shape[0]} entries but features have {design.shape[0]} rows",
            expected=[design.shape[0]],
            actual=[d.shape[0]]
        )
    n_treated = int(d.sum())
    if n_treated == 0 or n_treated == d.shape[0]:
        raise DomainError("Propensity fit needs both arms non-empty", parameter="d", value=n_treated)

    if penalty is None:
        beta, iterations, converged = _newton(design, d, 0.0, max_iterations, tol)
        if converged:
            return PropensityModel(coefficients=beta, trim=trim, iterations=iterations)
        logger.warning(
            f"Propensity Newton did not converge after {iterations} iterations "
            f"(max |beta| = {np.abs(beta).max():.2f}); refitting with penalty {FALLBACK_PENALTY}"
        )
        penalty = FALLBACK_PENALTY

    beta, iterations, converged = _newton(design, d, penalty, max_iterations, tol)
    if not np.isfinite(beta).all():
        raise EstimationError("Penalised propensity fit produced non-finite coefficients", model="propensity")
    if not converged:
        logger.warning(f"Penalised propensity fit stopped after {iterations} iterations")
    return PropensityModel(
        coefficients=beta,
        trim=trim,
        penalty=penalty,
        iterations=iterations,
        converged=converged
    )
