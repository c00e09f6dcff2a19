import math

import numpy as np
import pytest

from adriana.errors import EmptyTrainingSet, NonFiniteLoss, ValidationError
from adriana.surrogates import neural as nn


def grad_check(net, theta, X, y, masks=None, h=1e-5):
    """Max relative error between analytic and central-difference gradients."""
    _, g = net.loss_and_grad(theta, X, y, masks)
    worst = 0.0
    for k in range(len(theta)):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        num = (net.loss(tp, X, y, masks) - net.loss(tm, X, y, masks)) / (2 * h)
        denom = max(abs(num), abs(g[k]), 1e-6)
        worst = max(worst, abs(num - g[k]) / denom)
    return worst


@pytest.mark.parametrize("kind", ["MLP", "GRU", "LSTM"])
@pytest.mark.parametrize("seed", [0, 1])
def test_gradients(kind, seed):
    g = np.random.default_rng(seed)
    net = nn.Network(nn.NetworkConfig(kind, input_width=4, neurons=5, dropout_rate=0.0))
    theta = net.init_params(g)
    X, y = g.normal(size=(5, 4)), g.normal(size=5)
    assert grad_check(net, theta, X, y) < 1e-4


@pytest.mark.parametrize("kind", ["MLP", "GRU", "LSTM"])
def test_gradients_with_dropout_masks(kind):
    g = np.random.default_rng(3)
    net = nn.Network(nn.NetworkConfig(kind, input_width=3, neurons=4, dropout_rate=0.3))
    theta = net.init_params(g)
    X, y = g.normal(size=(5, 3)), g.normal(size=5)
    masks = net.sample_masks(g, 5, 3)
    assert grad_check(net, theta, X, y, masks) < 1e-4


@pytest.mark.parametrize("kind,width,expected", [
    ("LSTM", 1, 4 * (58 * 59 + 58) + 2 * 4 * (58 * 116 + 58) + 59),
    ("GRU", 1, 3 * (58 * 59 + 58) + 2 * 3 * (58 * 116 + 58) + 59),
    ("MLP", 9, (9 * 58 + 58) + 2 * (58 * 58 + 58) + 59),
])
def test_count_params_formulas(kind, width, expected):
    cfg = nn.NetworkConfig(kind, input_width=width, neurons=58)
    assert nn.count_params(cfg) == expected == nn.Network(cfg).size


def test_count_params_small_cases():
    # one dense 9 -> 10 hidden layer plus the output: 9*10+10 + 10*1+1
    assert nn.count_params(nn.NetworkConfig("MLP", 9, 10, hidden_layers=1)) == 111
    lstm1 = nn.count_params(nn.NetworkConfig("LSTM", 1, 58, hidden_layers=1))
    assert lstm1 - (58 + 1) == 13_920


def test_layout_views_share_memory():
    net = nn.Network(nn.NetworkConfig("LSTM", 3, 4))
    theta = np.zeros(net.size)
    v = net.views(theta)
    v["bout"][0] = 7.0
    assert theta[-1] == 7.0


def test_forget_bias_initialised_to_one():
    net = nn.Network(nn.NetworkConfig("LSTM", 2, 6))
    v = net.views(net.init_params(np.random.default_rng(0)))
    assert np.all(v["b0"][6:12] == 1.0)
    assert np.all(v["b0"][:6] == 0.0)


def test_adam_on_sphere():
    g = np.random.default_rng(11)
    for _ in range(5):
        target = g.normal(size=20)
        w = g.normal(size=20) * 3
        opt = nn.Adam(20, lr=1e-2)
        for _ in range(5000):
            opt.step(w, 2 * (w - target))
        assert np.linalg.norm(w - target) < 1e-3


@pytest.mark.parametrize("kind", ["MLP", "GRU", "LSTM"])
def test_dropout_off_at_inference(kind):
    net = nn.Network(nn.NetworkConfig(kind, 4, 6, dropout_rate=0.5))
    theta = net.init_params(np.random.default_rng(0))
    X = np.random.default_rng(1).normal(size=(7, 4))
    assert np.array_equal(net.predict(theta, X), net.predict(theta, X))


@pytest.mark.parametrize("kind", ["MLP", "GRU", "LSTM"])
def test_overfit_ten_samples(kind):
    g = np.random.default_rng(0)
    X, y = g.random((10, 5)), g.random(10)
    net = nn.Network(nn.NetworkConfig(kind, 5, 16, dropout_rate=0.0))
    theta, rep = nn.train_network(net, X, y, learning_rate=1e-2, batch_size=10,
                                  max_epochs=2000, patience=None, seed=0)
    assert math.sqrt(net.loss(theta, X, y)) < 1e-2
    assert rep.epochs_run == 2000 and not rep.early_stopped


def test_early_stopping_returns_best_snapshot():
    g = np.random.default_rng(4)
    X, y = g.random((60, 4)), g.random(60)
    Xv, yv = g.random((20, 4)), g.random(20)  # unrelated targets: validation stalls fast
    net = nn.Network(nn.NetworkConfig("MLP", 4, 32, dropout_rate=0.0))
    theta, rep = nn.train_network(net, X, y, Xv, yv, learning_rate=1e-2, batch_size=16,
                                  max_epochs=500, patience=5, seed=1)
    assert rep.early_stopped
    assert rep.epochs_run - rep.best_epoch == 5
    valid_curve = [v for _, v in rep.history]
    assert rep.best_valid_rmse == min(valid_curve) == valid_curve[rep.best_epoch - 1]
    assert math.sqrt(net.loss(theta, Xv, yv)) == pytest.approx(rep.best_valid_rmse, rel=1e-12)


@pytest.mark.parametrize("kind", ["MLP", "GRU", "LSTM"])
def test_training_deterministic(kind):
    g = np.random.default_rng(2)
    X, y = g.random((30, 4)), g.random(30)
    net = nn.Network(nn.NetworkConfig(kind, 4, 5))
    a, _ = nn.train_network(net, X, y, max_epochs=5, seed=9)
    b, _ = nn.train_network(net, X, y, max_epochs=5, seed=9)
    c, _ = nn.train_network(net, X, y, max_epochs=5, seed=10)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_raises():
    X = np.ones((4, 2)) * 1e200
    y = np.ones(4) * 1e200
    net = nn.Network(nn.NetworkConfig("MLP", 2, 3))
    with pytest.raises(NonFiniteLoss):
        nn.train_network(net, X, y, max_epochs=3, seed=0)


def test_empty_training_set():
    net = nn.Network(nn.NetworkConfig("MLP", 2, 3))
    with pytest.raises(EmptyTrainingSet):
        nn.train_network(net, np.zeros((0, 2)), np.zeros(0))


@pytest.mark.parametrize("kw", [dict(kind="CNN"), dict(neurons=0), dict(dropout_rate=1.0),
                                dict(input_width=0)])
def test_config_validation(kw):
    base = dict(kind="MLP", input_width=3, neurons=4)
    with pytest.raises(ValidationError):
        nn.NetworkConfig(**{**base, **kw})
