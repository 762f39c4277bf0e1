"""Tests for propensity scores, robust outcome models and clusterwise effects."""

import logging
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from robust_hte.core.types import Clustering, Dataset
from robust_hte.core.rng import root_state
from robust_hte.core.exceptions import ClusterSizeError, DomainError
from robust_hte.estimation import (
    EstimationConfig, OutcomeModel, PropensityModel, bootstrap_se, combine_effects, estimate_all,
    fit_arm, fit_outcome, fit_propensity, huber_clip, huber_weights, robust_scale, tau_dr,
    tau_ipw, tau_or, tau_plain_aipw, with_intercept
)


def _oracle_data(seed: int, n: int = 2000, offset: float = 1.4):
    """x ~ N(0, 1), e = expit(offset + 0.3 x), y = 0.3 x + 2 d + 0.1 eps."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 1))
    d = (rng.random(n) < expit(offset + 0.3 * x[:, 0])).astype(np.int64)
    y = 0.3 * x[:, 0] + 2.0 * d + 0.1 * rng.standard_normal(n)
    return x, y, d


# --- propensity -------------------------------------------------------------

def test_null_propensity_is_flat():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((1000, 1))
    d = rng.integers(0, 2, 1000)
    scores = fit_propensity(x, d).scores(x)
    assert abs(scores.mean() - 0.5) < 0.03
    assert np.abs(scores - 0.5).max() < 0.1


def test_balance_equations_hold():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((300, 3))
    d = (rng.random(300) < expit(x @ np.array([0.5, -0.3, 0.2]))).astype(int)
    pm = fit_propensity(x, d)
    assert pm.converged
    residual = with_intercept(x).T @ (d - pm.raw_scores(x))
    assert np.abs(residual).max() < 1e-6


def test_logistic_coefficients_are_consistent():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((20_000, 1))
    d = (rng.random(20_000) < expit(x[:, 0])).astype(int)
    pm = fit_propensity(x, d)
    np.testing.assert_allclose(pm.coefficients, [0.0, 1.0], atol=0.1)


def test_scores_are_trimmed():
    rng = np.random.default_rng(4)
    x = 3 * rng.standard_normal((400, 1))
    d = (rng.random(400) < expit(2 * x[:, 0])).astype(int)
    scores = fit_propensity(x, d, trim=0.1).scores(x)
    assert scores.min() >= 0.1 and scores.max() <= 0.9


def test_separation_falls_back_to_penalised_fit(caplog):
    x = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    d = np.array([0, 0, 0, 1, 1, 1])
    with caplog.at_level(logging.WARNING):
        pm = fit_propensity(x, d)
    assert pm.penalty == pytest.approx(1e-2)
    assert np.isfinite(pm.coefficients).all()
    assert any("refitting" in r.message for r in caplog.records)


def test_propensity_needs_both_arms():
    with pytest.raises(DomainError):
        fit_propensity(np.zeros((5, 1)), np.ones(5))


def test_constant_propensity_model():
    pm = PropensityModel.constant(0.5, 2)
    np.testing.assert_allclose(pm.scores(np.random.default_rng(5).standard_normal((4, 2))), 0.5)


# --- outcome models ---------------------------------------------------------

def test_robust_scale():
    assert robust_scale(np.array([1.0, 2.0, 3.0, 4.0, 100.0])) == pytest.approx(1.4826)
    values = np.array([0.0, 0.0, 0.0, 5.0])
    assert robust_scale(values) == pytest.approx(values.std())
    assert robust_scale(np.zeros(5)) == float("inf")


def test_huber_weights_and_clip():
    r = np.array([-3.0, -0.5, 0.0, 0.5, 3.0])
    np.testing.assert_allclose(huber_weights(r, 1.0, 1.0), [1 / 3, 1.0, 1.0, 1.0, 1 / 3])
    np.testing.assert_allclose(huber_clip(r, 1.0, 1.0), [-1.0, -0.5, 0.0, 0.5, 1.0])
    np.testing.assert_array_equal(huber_clip(r, float("inf"), 1.0), r)
    np.testing.assert_array_equal(huber_weights(r, 1.0, float("inf")), np.ones(5))


def test_huber_equals_least_squares_on_exact_data():
    x = np.random.default_rng(6).standard_normal((30, 2))
    y = 1.0 + x @ np.array([2.0, -1.0])
    huber = fit_arm(x, y, ridge_lambda=0.0, huber_c=1.345)
    plain = fit_arm(x, y, ridge_lambda=0.0, huber_c=float("inf"))
    np.testing.assert_allclose(huber.coefficients, plain.coefficients, atol=1e-6)


def test_huber_resists_gross_outlier():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(50)
    clean = 1.0 + 2.0 * x + 0.1 * rng.standard_normal(50)
    dirty = clean.copy()
    dirty[np.argmax(np.abs(x))] += 50.0
    reference = fit_arm(x, clean, ridge_lambda=0.0, huber_c=float("inf")).coefficients[1]
    huber = fit_arm(x, dirty, ridge_lambda=0.0, huber_c=1.345).coefficients[1]
    plain = fit_arm(x, dirty, ridge_lambda=0.0, huber_c=float("inf")).coefficients[1]
    assert abs(huber - reference) < 0.05
    assert abs(plain - reference) > 0.2


def test_large_ridge_penalty_leaves_the_mean():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((50, 2))
    y = 3.0 + x @ np.array([1.0, 1.0]) + rng.standard_normal(50)
    fit = fit_arm(x, y, ridge_lambda=1e10, huber_c=float("inf"))
    assert np.abs(fit.coefficients[1:]).max() < 1e-6
    assert fit.coefficients[0] == pytest.approx(y.mean(), abs=1e-6)


def test_singular_design_raises_lambda(caplog):
    x = np.random.default_rng(9).standard_normal(20)
    features = np.column_stack([x, x])
    with caplog.at_level(logging.WARNING):
        fit = fit_arm(features, 2 * x, ridge_lambda=0.0, huber_c=float("inf"))
    assert fit.ridge_lambda >= 1e-6
    assert any("Singular" in r.message for r in caplog.records)


def test_outcome_arms_are_fitted_separately():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((100, 1))
    d = np.arange(100) % 2
    y = np.where(d == 1, 2.0 + 0.5 * x[:, 0], -1.0 + 1.5 * x[:, 0])
    om = fit_outcome(x, y, d, ridge_lambda=0.0, huber_c=float("inf"))
    np.testing.assert_allclose(om.control.coefficients, [-1.0, 1.5], atol=1e-10)
    np.testing.assert_allclose(om.treated.coefficients, [2.0, 0.5], atol=1e-10)


def test_outcome_argument_checks():
    x = np.zeros((4, 1))
    with pytest.raises(DomainError):
        fit_outcome(x, np.zeros(4), np.array([0, 1, 1, 1]))
    with pytest.raises(DomainError):
        fit_outcome(x, np.zeros(4), np.array([0, 0, 1, 1]), ridge_lambda=-1.0)
    with pytest.raises(DomainError):
        fit_outcome(x, np.zeros(4), np.array([0, 0, 1, 1]), huber_c=0.0)


# --- effect estimators ------------------------------------------------------

def test_exact_models_give_mean_contrast():
    x = np.linspace(-1, 1, 10).reshape(-1, 1)
    d = np.array([0, 1] * 5)
    om = OutcomeModel.from_coefficients([0.5, 1.0], [1.0, 3.0])
    y = np.where(d == 1, om.mu1(x), om.mu0(x))
    effect = tau_dr(x, y, d, PropensityModel.constant(0.5, 1), om, np.arange(10), bootstrap_draws=0)
    assert effect.tau_hat == pytest.approx(float(np.mean(om.mu1(x) - om.mu0(x))), abs=1e-12)
    assert effect.n_treated == 5 and effect.n_control == 5


def test_aipw_matches_hand_computation():
    x = [-1.5, -0.5, 0.2, 1.0, -1.0, 0.3, 0.8, 1.6]
    d = [0, 0, 0, 0, 1, 1, 1, 1]
    y = [-0.7, 0.4, 2.1, 1.2, 0.9, 1.0, 3.5, 2.6]
    pm = PropensityModel(coefficients=np.array([0.1, 0.4]), trim=0.05)
    om = OutcomeModel.from_coefficients([0.5, 1.0], [1.5, 0.8], scale=0.4, huber_c=1.5)

    total = 0.0
    for xi, di, yi in zip(x, d, y):
        e = 1.0 / (1.0 + math.exp(-(0.1 + 0.4 * xi)))
        e = min(max(e, 0.05), 0.95)
        m0, m1 = 0.5 + 1.0 * xi, 1.5 + 0.8 * xi
        r = yi - (m1 if di else m0)
        r = max(-0.6, min(0.6, r))
        total += m1 - m0 + (r / e if di else -r / (1.0 - e))
    expected = total / 8

    effect = tau_dr(np.array(x).reshape(-1, 1), np.array(y), np.array(d), pm, om, np.ones(8, dtype=bool),
                    bootstrap_draws=0)
    assert effect.tau_hat == pytest.approx(expected, abs=1e-10)


def test_unclipped_dr_equals_plain_aipw():
    x, y, d = _oracle_data(11, n=300)
    idx = np.arange(300)
    pm = fit_propensity(x, d, trim=0.05)
    om = fit_outcome(x, y, d, ridge_lambda=0.0, huber_c=float("inf"))
    dr = tau_dr(x, y, d, pm, om, idx, bootstrap_draws=0)
    plain = tau_plain_aipw(x, y, d, idx, trim=0.05, ridge_lambda=0.0, bootstrap_draws=0)
    assert dr.tau_hat == plain.tau_hat


def test_double_robustness():
    for seed in range(20):
        x, y, d = _oracle_data(seed)
        idx = np.arange(d.size)
        true_outcome = OutcomeModel.from_coefficients([0.0, 0.3], [2.0, 0.3])
        wrong_propensity = PropensityModel.constant(0.5, 1)
        a = tau_dr(x, y, d, wrong_propensity, true_outcome, idx, bootstrap_draws=0)
        assert 1.9 <= a.tau_hat <= 2.1

        true_propensity = PropensityModel(coefficients=np.array([1.4, 0.3]))
        zero_outcome = OutcomeModel.from_coefficients([0.0, 0.0], [0.0, 0.0])
        b = tau_dr(x, y, d, true_propensity, zero_outcome, idx, bootstrap_draws=0)
        assert 1.9 <= b.tau_hat <= 2.1


def test_ipw_with_known_coin_flip():
    rng = np.random.default_rng(12)
    n = 20_000
    x = rng.standard_normal((n, 1))
    d = rng.integers(0, 2, n)
    y = 0.5 * x[:, 0] + 2.0 * d - 1.0 + 0.2 * rng.standard_normal(n)
    effect = tau_ipw(x, y, d, np.arange(n), pm=PropensityModel.constant(0.5, 1), bootstrap_draws=0)
    difference = y[d == 1].mean() - y[d == 0].mean()
    assert abs(effect.tau_hat - difference) < 0.05


def test_estimators_agree_on_clean_linear_data():
    rng = np.random.default_rng(13)
    n = 5000
    x = rng.standard_normal((n, 2))
    d = (rng.random(n) < expit(0.3 * x[:, 0])).astype(int)
    y = 0.2 * x[:, 0] - 0.1 * x[:, 1] + 0.5 * d + 0.1 * rng.standard_normal(n)
    idx = np.arange(n)
    estimates = [
        tau_plain_aipw(x, y, d, idx, bootstrap_draws=0).tau_hat,
        tau_ipw(x, y, d, idx, bootstrap_draws=0).tau_hat,
        tau_or(x, y, d, idx, bootstrap_draws=0).tau_hat,
    ]
    assert max(estimates) - min(estimates) < 0.05


def test_dr_tracks_difference_in_means_in_experiments():
    for seed in range(30):
        rng = np.random.default_rng(100 + seed)
        n = 200
        x = rng.standard_normal((n, 1))
        d = rng.integers(0, 2, n)
        y = 0.2 * x[:, 0] + d + rng.standard_normal(n)
        pm = fit_propensity(x, d)
        om = fit_outcome(x, y, d)
        effect = tau_dr(x, y, d, pm, om, np.arange(n), bootstrap_draws=200, rng=root_state(seed))
        difference = y[d == 1].mean() - y[d == 0].mean()
        assert abs(effect.tau_hat - difference) <= 2 * effect.se_hat


def test_small_cluster_is_rejected():
    x, y, d = _oracle_data(14, n=50)
    pm = PropensityModel.constant(0.5, 1)
    om = OutcomeModel.from_coefficients([0.0, 0.3], [2.0, 0.3])
    idx = np.concatenate([np.flatnonzero(d == 1)[:5], np.flatnonzero(d == 0)[:2]])
    with pytest.raises(ClusterSizeError) as info:
        tau_dr(x, y, d, pm, om, idx, min_per_arm=4)
    assert info.value.n_control == 2


def test_bootstrap_standard_error():
    terms = np.random.default_rng(15).standard_normal(400)
    a = bootstrap_se(terms, 500, root_state(1))
    assert a == bootstrap_se(terms, 500, root_state(1))
    assert a == pytest.approx(terms.std(ddof=1) / np.sqrt(400), rel=0.15)
    assert bootstrap_se(np.full(10, 3.0), 100, root_state(1)) == 0.0
    assert bootstrap_se(terms, 0, root_state(1)) == 0.0


def test_standard_error_shrinks_with_cluster_size():
    x, y, d = _oracle_data(16, n=2000, offset=0.0)
    pm = fit_propensity(x, d)
    om = fit_outcome(x, y, d)
    small = tau_dr(x, y, d, pm, om, np.arange(100), rng=root_state(2))
    large = tau_dr(x, y, d, pm, om, np.arange(2000), rng=root_state(2))
    assert large.se_hat < small.se_hat


# --- estimate_all -----------------------------------------------------------

def _dataset(seed: int = 17, n: int = 120):
    x, y, d = _oracle_data(seed, n=n, offset=0.0)
    codes = np.column_stack([x[:, 0], np.random.default_rng(seed).standard_normal(n)])
    ds = Dataset(y=y, delta=np.ones(n), d=d, x=x)
    return ds, codes


def _two_clusters(codes: np.ndarray, swap: bool = False) -> Clustering:
    labels = (codes[:, 0] > 0).astype(int)
    if swap:
        labels = 1 - labels
    centroids = np.vstack([codes[labels == c].mean(axis=0) for c in (0, 1)])
    return Clustering(labels=labels, centroids=centroids)


def test_single_cluster_overall_equals_cluster_effect():
    ds, codes = _dataset()
    clustering = Clustering(labels=np.zeros(ds.n, dtype=int), centroids=codes.mean(axis=0, keepdims=True))
    result = estimate_all(ds, clustering, codes, EstimationConfig(bootstrap_draws=50), root_state(3))
    assert len(result.clusters) == 1
    assert result.overall_tau == result.clusters[0].tau_hat
    np.testing.assert_array_equal(result.tau_per_sample, np.full(ds.n, result.overall_tau))


def test_overall_is_size_weighted():
    ds, codes = _dataset()
    result = estimate_all(ds, _two_clusters(codes), codes, EstimationConfig(bootstrap_draws=50), root_state(4))
    n_k = np.array([c.n_k for c in result.clusters])
    tau_k = np.array([c.tau_hat for c in result.clusters])
    assert n_k.sum() == ds.n
    assert result.overall_tau == pytest.approx(float(n_k @ tau_k / ds.n), abs=1e-12)
    for i in range(ds.n):
        assert result.tau_per_sample[i] == tau_k[result.clustering.labels[i]]


def test_relabelling_leaves_overall_unchanged():
    ds, codes = _dataset()
    config = EstimationConfig(bootstrap_draws=0)
    a = estimate_all(ds, _two_clusters(codes), codes, config, root_state(5))
    b = estimate_all(ds, _two_clusters(codes, swap=True), codes, config, root_state(5))
    assert a.overall_tau == pytest.approx(b.overall_tau, abs=1e-12)
    np.testing.assert_allclose(a.tau_per_sample, b.tau_per_sample, atol=1e-12)


def test_estimate_all_merges_small_clusters():
    ds, codes = _dataset()
    labels = np.zeros(ds.n, dtype=int)
    labels[np.argmax(codes[:, 0])] = 1
    centroids = np.vstack([codes[labels == 0].mean(axis=0), codes[labels == 1].mean(axis=0)])
    clustering = Clustering(labels=labels, centroids=centroids, outlier_clusters=frozenset({1}))
    result = estimate_all(ds, clustering, codes, EstimationConfig(bootstrap_draws=0), root_state(6))
    assert len(result.clusters) == 1
    assert result.metadata["merged_from"] == 2


def test_estimation_result_serialises():
    ds, codes = _dataset()
    result = estimate_all(ds, _two_clusters(codes), codes, EstimationConfig(bootstrap_draws=20), root_state(7))
    payload = result.to_dict()
    assert set(payload) == {"clusters", "overall"}
    assert set(payload["clusters"][0]) == {"id", "tau_hat", "se", "n", "n_treated", "n_control", "outlier"}
    assert payload["overall"]["tau_hat"] == result.overall_tau


def test_combine_effects():
    ds, codes = _dataset()
    result = estimate_all(ds, _two_clusters(codes), codes, EstimationConfig(bootstrap_draws=30), root_state(8))
    tau, se = combine_effects(result.clusters)
    weights = np.array([c.n_k for c in result.clusters]) / ds.n
    ses = np.array([c.se_hat for c in result.clusters])
    assert tau == result.overall_tau
    assert se == pytest.approx(float(np.sqrt(np.sum(weights ** 2 * ses ** 2))))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
