"""Per-arm Huber ridge outcome regressions fitted by IRLS."""

from dataclasses import dataclass
import logging

import numpy as np

from .propensity import with_intercept
from ..core.exceptions import DomainError, EstimationError, ShapeError

logger = logging.getLogger(__name__)

MAD_TO_SD = 1.4826
MAX_RETRIES = 3
CONDITION_LIMIT = 1e12


def robust_scale(residuals: np.ndarray) -> float:
    """1.4826 * MAD, falling back to the standard deviation when the MAD is zero.

    An exact fit (all residuals zero) returns ``inf`` so that no clipping is
    applied downstream.
    """
    residuals = np.asarray(residuals, dtype=np.float64)
    scale = MAD_TO_SD * float(np.median(np.abs(residuals - np.median(residuals))))
    if scale == 0.0:
        scale = float(residuals.std())
    return scale if scale > 0.0 else float("inf")


def huber_weights(residuals: np.ndarray, scale: float, c: float) -> np.ndarray:
    """w(r) = min(1, c / |r / s|)."""
    if not np.isfinite(c) or not np.isfinite(scale):
        return np.ones_like(residuals)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, c * scale / np.abs(residuals))


def huber_clip(residuals: np.ndarray, scale: float, c: float) -> np.ndarray:
    """psi_c: residuals clipped to +/- c * s."""
    bound = c * scale
    if not np.isfinite(bound):
        return np.asarray(residuals, dtype=np.float64)
    return np.clip(residuals, -bound, bound)


@dataclass(frozen=True)
class ArmFit:
    """Coefficients (intercept first) and residual scale of one arm."""
    coefficients: np.ndarray
    scale: float
    ridge_lambda: float
    iterations: int


@dataclass(frozen=True)
class OutcomeModel:
    """Outcome regressions mu_0(x), mu_1(x) with Huber threshold ``huber_c``."""

    control: ArmFit
    treated: ArmFit
    ridge_lambda: float = 1.0
    huber_c: float = 1.345

    def arm(self, treated: int) -> ArmFit:
        return self.treated if treated else self.control

    def predict(self, features: np.ndarray, treated: int) -> np.ndarray:
        design = with_intercept(features)
        coefficients = self.arm(treated).coefficients
        if design.shape[1] != coefficients.size:
            raise ShapeError(
                f"Features have {design.shape[1] - 1} columns, model expects {coefficients.size - 1}",
                expected=[coefficients.size - 1],
                actual=[design.shape[1] - 1]
            )
        return design @ coefficients

    def mu0(self, features: np.ndarray) -> np.ndarray:
        return self.predict(features, 0)

    def mu1(self, features: np.ndarray) -> np.ndarray:
        return self.predict(features, 1)

    @classmethod
    def from_coefficients(
        cls,
        control: np.ndarray,
        treated: np.ndarray,
        scale: float = float("inf"),
        huber_c: float = float("inf")
    ) -> "OutcomeModel":
        """Fixed (not fitted) linear outcome models, e.g. a known truth."""
        return cls(
            control=ArmFit(np.asarray(control, dtype=np.float64), scale, 0.0, 0),
            treated=ArmFit(np.asarray(treated, dtype=np.float64), scale, 0.0, 0),
            ridge_lambda=0.0,
            huber_c=huber_c
        )


def _weighted_ridge(design: np.ndarray, y: np.ndarray, weights: np.ndarray, ridge_lambda: float) -> tuple:
    """Solve the weighted ridge normal equations, raising lambda tenfold on singularity."""
    penalty = np.full(design.shape[1], 1.0)
    penalty[0] = 0.0
    lam = ridge_lambda
    for attempt in range(MAX_RETRIES + 1):
        gram = (design * weights[:, None]).T @ design + lam * np.diag(penalty)
        if np.linalg.cond(gram) < CONDITION_LIMIT:
            try:
                return np.linalg.solve(gram, (design * weights[:, None]).T @ y), lam
            except np.linalg.LinAlgError:
                pass
        if attempt == MAX_RETRIES:
            break
        new_lam = max(10.0 * lam, 1e-6)
        logger.warning(f"Singular outcome normal equations at lambda={lam:g}; retrying with {new_lam:g}")
        lam = new_lam
    raise EstimationError(
        f"Outcome normal equations stay singular after {MAX_RETRIES} lambda increases (lambda={lam:g})",
        model="outcome"
    )


def fit_arm(
    features: np.ndarray,
    y: np.ndarray,
    ridge_lambda: float = 1.0,
    huber_c: float = 1.345,
    max_iterations: int = 50,
    tol: float = 1e-8
) -> ArmFit:
    """Huber ridge regression of one arm by iteratively reweighted least squares."""
    design = with_intercept(features)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    weights = np.ones(y.shape[0])
    beta, lam = _weighted_ridge(design, y, weights, ridge_lambda)
    iterations = 1
    while np.isfinite(huber_c) and iterations < max_iterations:
        residuals = y - design @ beta
        scale = robust_scale(residuals)
        weights = huber_weights(residuals, scale, huber_c)
        updated, lam = _weighted_ridge(design, y, weights, lam)
        iterations += 1
        change = float(np.abs(updated - beta).max())
        beta = updated
        if change < tol:
            break
    return ArmFit(
        coefficients=beta,
        scale=robust_scale(y - design @ beta),
        ridge_lambda=lam,
        iterations=iterations
    )


def fit_outcome(
    features: np.ndarray,
    y: np.ndarray,
    d: np.ndarray,
    ridge_lambda: float = 1.0,
    huber_c: float = 1.345,
    max_iterations: int = 50,
    tol: float = 1e-8
) -> OutcomeModel:
    """Fit mu_0 and mu_1 separately on the control and treated units.

    Each arm is a ridge regression (intercept unpenalised) reweighted with
    Huber weights min(1, c / |r / s|), s = 1.4826 * MAD of the residuals, until
    the coefficients move less than ``tol`` or ``max_iterations`` is reached.
    ``huber_c = inf`` gives the plain ridge fit and ``ridge_lambda = 0`` plain
    least squares.

    Raises:
        DomainError: an arm has fewer than 2 units or lambda/c out of range
        EstimationError: normal equations stay singular after retries
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    d = np.asarray(d).reshape(-1)
    if not (features.shape[0] == y.shape[0] == d.shape[0]):
        raise ShapeError(
            f"features ({features.shape[0]}), y ({y.shape[0]}) and d ({d.shape[0]}) lengths differ",
            actual=[features.shape[0], y.shape[0], d.shape[0]]
        )
    if ridge_lambda < 0:
        raise DomainError(f"ridge_lambda must be >= 0, got {ridge_lambda}", parameter="ridge_lambda", value=ridge_lambda)
    if not huber_c > 0:
        raise DomainError(f"huber_c must be > 0, got {huber_c}", parameter="huber_c", value=huber_c)

    arms = {}
    for arm in (0, 1):
        mask = d == arm
        if mask.sum() < 2:
            raise DomainError(
                f"Outcome fit needs >= 2 units per arm, arm {arm} has {int(mask.sum())}",
                parameter="d",
                value=int(mask.sum())
            )
        arms[arm] = fit_arm(features[mask], y[mask], ridge_lambda, huber_c, max_iterations, tol)
    return OutcomeModel(control=arms[0], treated=arms[1], ridge_lambda=ridge_lambda, huber_c=huber_c)
