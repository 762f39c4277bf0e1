"""Methods compared in the benchmark: the proposed pipeline and simple raw-covariate comparators.

Comparators work on the raw covariates over the whole sample (one cluster),
so every unit receives the same estimate. With p > n the outcome fits use the
configured ridge penalty and the propensity fit is penalised by the same
weight.
"""

import logging

import numpy as np

from .base_method import BaseMethod
from ..core.types import Dataset, RngState
from ..core.exceptions import DomainError
from ..estimation import fit_outcome, fit_propensity, tau_dr, tau_ipw, tau_or
from ..pipeline import run_pipeline

logger = logging.getLogger(__name__)


class ProposedMethod(BaseMethod):
    name = "proposed"

    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        return run_pipeline(ds, self.config, rng).tau_per_sample


class _RawCovariateMethod(BaseMethod):
    """Shared nuisance fits on raw covariates."""

    def _propensity(self, ds: Dataset):
        est = self.config.estimation
        penalty = est.ridge_lambda if est.ridge_lambda > 0 else None
        return fit_propensity(ds.x, ds.d, trim=est.trim, penalty=penalty)

    def _outcome(self, ds: Dataset):
        return fit_outcome(
            ds.x, ds.y, ds.d,
            ridge_lambda=self.config.estimation.ridge_lambda,
            huber_c=float("inf")
        )

    def _effect_kwargs(self, rng: RngState) -> dict:
        est = self.config.estimation
        return {"min_per_arm": est.min_per_arm, "bootstrap_draws": 0, "rng": rng}


class PlainAipwMethod(_RawCovariateMethod):
    name = "plain_aipw"

    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        effect = tau_dr(
            ds.x, ds.y, ds.d,
            self._propensity(ds),
            self._outcome(ds),
            np.arange(ds.n),
            **self._effect_kwargs(rng)
        )
        return np.full(ds.n, effect.tau_hat)


class IpwMethod(_RawCovariateMethod):
    name = "ipw"

    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        effect = tau_ipw(ds.x, ds.y, ds.d, np.arange(ds.n), pm=self._propensity(ds), **self._effect_kwargs(rng))
        return np.full(ds.n, effect.tau_hat)


class OrMethod(_RawCovariateMethod):
    name = "or"

    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        effect = tau_or(ds.x, ds.y, ds.d, np.arange(ds.n), om=self._outcome(ds), **self._effect_kwargs(rng))
        return np.full(ds.n, effect.tau_hat)


class OracleMethod(BaseMethod):
    """Returns the simulation truth; exercises the scoring path."""

    name = "oracle"

    def estimate(self, ds: Dataset, rng: RngState) -> np.ndarray:
        if not ds.has_truth:
            raise DomainError("The oracle method needs a dataset with truth", parameter="truth")
        return np.array(ds.truth)
