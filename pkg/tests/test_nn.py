import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracle
from qcredit import nn
from qcredit.errors import ConfigError, NumericalError
from qcredit.nn import Activation, DenseLayer, DropoutLayer

probs = arrays(float, st.integers(1, 20), elements=st.floats(0, 1))


def test_dense_identity_layer():
    layer = DenseLayer(np.eye(3), np.zeros(3))
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(nn.dense_forward(layer, x), x)


def test_relu_zero():
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.RELU)
    assert np.array_equal(nn.dense_forward(layer, [-1.0, 2.0]), [0.0, 2.0])


@pytest.mark.parametrize("act", list(Activation))
def test_dense_backward_matches_finite_differences(act, rng):
    layer = DenseLayer.init(4, 3, act, rng)
    layer.biases = rng.standard_normal(3)
    x = rng.standard_normal((5, 4))
    up = rng.standard_normal((5, 3))

    def loss_w(w):
        return float((nn.dense_forward(DenseLayer(w.reshape(3, 4), layer.biases, act), x) * up).sum())

    def loss_x(v):
        return float((nn.dense_forward(layer, v.reshape(5, 4)) * up).sum())

    d_in, d_w, d_b = nn.dense_backward(layer, x, up)
    assert np.allclose(d_w.ravel(), oracle.central_diff(loss_w, layer.weights.ravel()), atol=1e-6)
    assert np.allclose(d_in.ravel(), oracle.central_diff(loss_x, x.ravel()), atol=1e-6)
    assert np.allclose(d_b, (up * nn.activation_grad(act, x @ layer.weights.T + layer.biases,
                                                     nn.dense_forward(layer, x))).sum(0))


def test_init_ranges(rng):
    he = DenseLayer.init(100, 50, Activation.RELU, rng)
    xa = DenseLayer.init(100, 50, Activation.TANH, rng)
    assert np.abs(he.weights).max() <= np.sqrt(6 / 100)
    assert np.abs(xa.weights).max() <= np.sqrt(6 / 150)
    assert not he.biases.any()


def test_dropout_eval_identity(rng):
    x = rng.standard_normal(10)
    out, _ = nn.dropout_forward(DropoutLayer(0.5, training=False), x, rng)
    assert np.array_equal(out, x)


def test_dropout_zero_rate_identity(rng):
    x = rng.standard_normal(10)
    assert np.array_equal(nn.dropout_forward(DropoutLayer(0.0), x, rng)[0], x)


def test_dropout_is_inverted(rng):
    x = np.ones(200_000)
    out, mask = nn.dropout_forward(DropoutLayer(0.1), x, rng)
    assert set(np.unique(out)) <= {0.0, 1 / 0.9}
    assert abs(out.mean() - 1) < 0.01
    assert np.array_equal(nn.dropout_backward(DropoutLayer(0.1), mask, x), out)


def test_dropout_rate_one_rejected():
    with pytest.raises(ConfigError):
        DropoutLayer(1.0)


def test_bce_known_value():
    loss, _ = nn.bce_loss([0.5], [1])
    assert abs(loss[0] - np.log(2)) < 1e-15


def test_bce_clamped_at_extremes():
    loss, grad = nn.bce_loss([0.0, 1.0], [1, 0])
    assert np.all(np.isfinite(loss)) and np.all(np.isfinite(grad))
    assert abs(loss[0] + np.log(nn.BCE_EPS)) < 1e-6


@given(probs, st.integers(0, 1))
def test_bce_non_negative(p, y):
    loss, _ = nn.bce_loss(p, np.full(p.shape, y))
    assert np.all(loss >= 0)


def test_bce_gradient_matches_finite_differences():
    p = np.array([0.2, 0.7, 0.55])
    y = np.array([1, 0, 1])
    _, grad = nn.bce_loss(p, y)
    fd = oracle.central_diff(lambda v: nn.bce_loss(v, y)[0].sum(), p)
    assert np.allclose(grad, fd, atol=1e-6)


def test_bce_rejects_bad_labels():
    with pytest.raises(ConfigError):
        nn.bce_loss([0.3], [2])


def test_sgd_step():
    out = nn.sgd_step(np.array([1.0, 2.0]), np.array([10.0, -10.0]), 0.1)
    assert np.allclose(out, [0.0, 3.0])


def test_sgd_zero_lr_is_identity():
    w = np.array([1.0, 2.0])
    assert np.array_equal(nn.sgd_step(w, np.array([5.0, 5.0]), 0.0), w)


def test_sgd_non_finite_names_block():
    with pytest.raises(NumericalError, match="feeding.weights"):
        nn.sgd_step(np.zeros(2), np.array([np.nan, 0.0]), 0.1, "feeding.weights")


def test_sgd_negative_lr():
    with pytest.raises(ConfigError):
        nn.sgd_step(np.zeros(2), np.zeros(2), -0.1)
