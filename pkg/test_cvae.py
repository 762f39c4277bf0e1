"""Tests for the conditional VAE and its joint training with the attention layer."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest
import torch
from pydantic import ValidationError

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from robust_hte.core.types import LatentCode, LatentCodes
from robust_hte.core.rng import root_state
from robust_hte.core.exceptions import TrainingError
from robust_hte.graph import build_graph, init_gat_layer
from robust_hte.latent import (
    CvaeModel, CvaeTrainer, TrainConfig, augment_codes, decode, elbo, encode, grad_check,
    kl_divergence, make_grad_check_instance, robust_standardization, train
)
from robust_hte.simulation import SimConfig, gen_dataset

RUN_SLOW = os.environ.get("HTE_RUN_SLOW") == "1"


def _zero_model(q: int = 3, latent: int = 2, hidden: int = 4) -> CvaeModel:
    model = CvaeModel(q, latent, hidden)
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    return model


def _problem(n: int = 12, p: int = 6, seed: int = 1):
    ds = gen_dataset(SimConfig(n=n, p=p, seed=seed))
    graph = build_graph(ds, 0.3, 5)
    layer = init_gat_layer(graph.f, 3, root_state(seed))
    return ds, graph, layer


def test_zero_network_encodes_to_prior():
    model = _zero_model()
    eps = np.array([[0.3, -1.2], [2.0, 0.1]])
    codes = encode(model, np.ones((2, 3)), np.array([0, 1]), eps=eps)
    assert isinstance(codes, LatentCodes)
    np.testing.assert_array_equal(codes.mu, 0.0)
    np.testing.assert_array_equal(codes.logvar, 0.0)
    np.testing.assert_allclose(codes.z, eps)


def test_single_sample_encode():
    code = encode(_zero_model(), np.ones(3), 1)
    assert isinstance(code, LatentCode)
    assert code.mu.shape == (2,)


def test_encode_is_deterministic():
    model = CvaeModel.initialize(3, 2, 4, root_state(2))
    x = np.random.default_rng(2).standard_normal((4, 3))
    a = encode(model, x, np.array([0, 1, 0, 1]), rng=root_state(3))
    b = encode(model, x, np.array([0, 1, 0, 1]), rng=root_state(3))
    np.testing.assert_array_equal(a.z, b.z)


def test_logvar_is_clamped():
    model = _zero_model()
    with torch.no_grad():
        model.enc_out.bias[2:] = 50.0
        model.enc_out.bias[:2] = 0.0
    code = encode(model, np.zeros(3), 0)
    np.testing.assert_array_equal(code.logvar, [10.0, 10.0])
    with torch.no_grad():
        model.enc_out.bias[2:] = -50.0
    assert np.all(encode(model, np.zeros(3), 0).logvar == -10.0)


def test_zero_network_decodes_to_zero():
    np.testing.assert_array_equal(decode(_zero_model(), np.ones((3, 2)), 1), 0.0)


def test_decode_depends_on_treatment():
    model = _zero_model()
    with torch.no_grad():
        model.dec_hidden.weight[:, -1] = 0.7
        model.dec_out.weight.fill_(1.0)
    z = np.array([0.2, -0.4])
    assert not np.allclose(decode(model, z, 0), decode(model, z, 1))


def test_decode_matches_hand_computation():
    model = CvaeModel(input_dim=2, latent_dim=1, hidden_dim=2)
    w1 = np.array([[0.1, -0.2], [0.3, 0.4]])
    b1 = np.array([0.05, -0.05])
    w2 = np.array([[0.5, -0.6], [0.7, 0.8]])
    b2 = np.array([0.01, 0.02])
    with torch.no_grad():
        model.dec_hidden.weight.copy_(torch.as_tensor(w1))
        model.dec_hidden.bias.copy_(torch.as_tensor(b1))
        model.dec_out.weight.copy_(torch.as_tensor(w2))
        model.dec_out.bias.copy_(torch.as_tensor(b2))
    z, t = 0.9, 1.0
    hidden = np.tanh(w1 @ np.array([z, t]) + b1)
    np.testing.assert_allclose(decode(model, np.array([z]), 1), w2 @ hidden + b2, atol=1e-14)


def test_kl_closed_form_values():
    assert kl_divergence(np.zeros(2), np.zeros(2))[0] == 0.0
    assert kl_divergence(np.array([1.0, 0.0]), np.zeros(2))[0] == pytest.approx(0.5)
    rng = np.random.default_rng(4)
    values = kl_divergence(rng.standard_normal((100, 3)), rng.standard_normal((100, 3)))
    assert np.all(values >= 0.0)


def test_kl_matches_monte_carlo():
    mu = np.array([0.5, -1.0])
    logvar = np.array([0.3, -0.5])
    std = np.exp(0.5 * logvar)
    z = mu + std * np.random.default_rng(5).standard_normal((400_000, 2))
    log_q = -0.5 * (((z - mu) / std) ** 2 + logvar).sum(axis=1)
    log_p = -0.5 * (z ** 2).sum(axis=1)
    estimate = np.mean(log_q - log_p)
    exact = kl_divergence(mu, logvar)[0]
    assert abs(estimate - exact) / exact < 0.01


def test_elbo_breakdown():
    model = CvaeModel.initialize(3, 2, 4, root_state(6))
    x = np.random.default_rng(6).standard_normal((5, 3))
    result = elbo(model, x, np.array([0, 1, 1, 0, 1]), x, kl_weight=0.5)
    assert result.loss == pytest.approx(result.reconstruction + 0.5 * result.kl)
    assert result.kl >= 0.0


def test_elbo_rejects_non_finite_loss():
    model = _zero_model()
    with torch.no_grad():
        model.dec_out.bias.fill_(float("inf"))
    with pytest.raises(TrainingError):
        elbo(model, np.zeros((2, 3)), 0, np.zeros((2, 3)), epoch=3)


def test_epochs_must_be_positive():
    with pytest.raises(ValidationError):
        TrainConfig(epochs=0)


def test_single_epoch_is_one_gradient_step():
    ds, graph, layer = _problem()
    trainer = CvaeTrainer(TrainConfig(epochs=1, learning_rate=0.05, latent_dim=2, hidden_dim=4))
    trainer.setup(ds, graph, layer)
    before = trainer.parameter_vector()
    grads = trainer.gradients(0)
    trainer.step(0)
    after = trainer.parameter_vector()
    np.testing.assert_allclose(before - after, 0.05 * grads, rtol=1e-9, atol=1e-15)
    assert len(trainer.loss_trace) == 1


def test_training_leaves_input_layer_untouched():
    ds, graph, layer = _problem()
    original = layer.W.detach().numpy().copy()
    train(ds, graph, layer, TrainConfig(epochs=3))
    np.testing.assert_array_equal(layer.W.detach().numpy(), original)


def _default_problem(seed: int, contamination_ratio: float = 0.0):
    ds = gen_dataset(SimConfig(n=100, p=100, contamination_ratio=contamination_ratio, seed=seed))
    graph = build_graph(ds, 0.3, 10)
    layer = init_gat_layer(graph.f, 8, root_state(seed))
    return ds, graph, layer


def test_loss_decreases_on_simulated_data():
    ds, graph, layer = _default_problem(seed=7)
    result = train(ds, graph, layer, TrainConfig())
    trace = np.array(result.loss_trace)
    assert trace.size == 500
    assert np.isfinite(trace).all()
    assert trace[-20:].mean() <= trace[:20].mean()
    assert np.isfinite(result.codes.z).all()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_loss_stays_bounded_on_contaminated_data(seed):
    ds, graph, layer = _default_problem(seed=seed, contamination_ratio=0.2)
    trace = np.array(train(ds, graph, layer, TrainConfig(), root_state(seed)).loss_trace)
    assert np.isfinite(trace).all()
    assert trace.max() < 10.0 * max(trace[0], 1.0)
    assert trace[-20:].mean() <= trace[:20].mean()


def test_reconstruction_target_is_fixed_at_setup():
    ds, graph, layer = _problem(seed=5)
    trainer = CvaeTrainer(TrainConfig(epochs=10, learning_rate=0.05))
    trainer.setup(ds, graph, layer)
    target = trainer.target
    _, inputs = trainer.latent_codes()
    np.testing.assert_allclose(target, inputs, atol=1e-12)
    for epoch in range(10):
        trainer.step(epoch)
    np.testing.assert_array_equal(trainer.target, target)
    _, moved = trainer.latent_codes()
    assert not np.allclose(moved, target)


def test_standardization_uses_median_and_mad():
    embedded = torch.tensor([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0], [100.0, 5.0]], dtype=torch.float64)
    shift, scale = robust_standardization(embedded)
    np.testing.assert_allclose(shift.numpy(), [3.0, 5.0])
    np.testing.assert_allclose(scale.numpy(), [1.4826, 1.0])


def test_divergence_raises_training_error():
    ds, graph, layer = _problem(seed=6)
    trainer = CvaeTrainer(TrainConfig(epochs=5))
    trainer.setup(ds, graph, layer)
    trainer.step(0)
    with torch.no_grad():
        trainer.model.dec_out.weight.mul_(1e4)
        trainer.model.dec_out.bias.fill_(1e4)
    with pytest.raises(TrainingError) as excinfo:
        trainer.step(1)
    assert excinfo.value.epoch == 1
    assert len(excinfo.value.loss_trace) == 2
    assert trainer.loss_trace == excinfo.value.loss_trace[:1]


def test_codes_are_deterministic():
    ds, graph, layer = _problem(seed=8)
    cfg = TrainConfig(epochs=20)
    a = train(ds, graph, layer, cfg, root_state(9))
    b = train(ds, graph, layer, cfg, root_state(9))
    np.testing.assert_array_equal(a.codes.z, b.codes.z)
    np.testing.assert_array_equal(a.codes.z, a.codes.mu)
    assert a.codes.z.shape == (ds.n, 2)


def test_augmented_codes_are_draw_major():
    ds, graph, layer = _problem(seed=10)
    result = train(ds, graph, layer, TrainConfig(epochs=5))
    assert augment_codes(result.model, result.inputs, ds.d, 0, root_state(11)).shape == (0, 2)
    draws = augment_codes(result.model, result.inputs, ds.d, 3, root_state(11))
    assert draws.shape == (3 * ds.n, 2)
    eps = root_state(11).generator().standard_normal((3, ds.n, 2))
    std = np.exp(0.5 * result.codes.logvar)
    np.testing.assert_allclose(draws[ds.n:2 * ds.n], result.codes.mu + std * eps[1], atol=1e-12)


def test_whole_model_gradient_check():
    for seed in range(20):
        model, layer, instance = make_grad_check_instance(root_state(seed))
        assert grad_check(model, layer, instance) < 1e-4


def test_gradient_check_detects_corruption():
    model, layer, instance = make_grad_check_instance(root_state(12))

    def double_first_entry(grads):
        grads["cvae.dec_out.bias"].reshape(-1)[0] *= 2.0

    assert grad_check(model, layer, instance, corrupt=double_first_entry) > 1e-2


def test_zero_loss_scale_gives_zero_gradients():
    model, layer, instance = make_grad_check_instance(root_state(13))
    assert grad_check(model, layer, instance, loss_scale=0.0) == 0.0


@pytest.mark.skipif(not RUN_SLOW, reason="set HTE_RUN_SLOW=1 to run")
def test_autoencoding_sanity():
    ds, graph, _ = _problem(n=5, p=6, seed=14)
    layer = init_gat_layer(graph.f, 2, root_state(14))
    trainer = CvaeTrainer(TrainConfig(epochs=2000, learning_rate=0.05, kl_weight=0.0, latent_dim=2,
                                      train_gat=False))
    trainer.setup(ds, graph, layer)
    codes, inputs = trainer.latent_codes()
    initial = elbo(trainer.model, inputs, ds.d, inputs).reconstruction
    for epoch in range(2000):
        trainer.step(epoch)
    codes, inputs = trainer.latent_codes()
    final = elbo(trainer.model, inputs, ds.d, inputs).reconstruction
    assert final < 0.1 * initial


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
