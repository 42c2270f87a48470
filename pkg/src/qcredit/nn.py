"""Dense layers, dropout, binary cross-entropy and plain SGD.

Everything works on a single vector or on a batch of row vectors (S, in).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, NumericalError

BCE_EPS = 1e-12
LEAKY_SLOPE = 0.01


class Activation(str, enum.Enum):
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


def sigmoid(z):
    return expit(np.asarray(z, dtype=float))


def activate(kind: Activation, z):
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.SIGMOID:
        return sigmoid(z)
    return np.array(z, dtype=float)


def activation_grad(kind: Activation, z, y):
    """Derivative of the activation at pre-activation ``z`` (``y`` is its output)."""
    if kind is Activation.RELU:
        return (z > 0).astype(float)
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind is Activation.TANH:
        return 1.0 - y ** 2
    if kind is Activation.SIGMOID:
        return y * (1.0 - y)
    return np.ones_like(z)


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        self.activation = Activation(self.activation)
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise ConfigError(
                f"inconsistent layer shapes: weights {self.weights.shape}, biases {self.biases.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_params(self) -> int:
        return self.weights.size + self.biases.size

    @classmethod
    def init(cls, in_dim: int, out_dim: int, activation: Activation, rng: np.random.Generator):
        """He-uniform for ReLU-type layers, Xavier-uniform otherwise; zero biases."""
        activation = Activation(activation)
        if activation in (Activation.RELU, Activation.LEAKY_RELU):
            limit = np.sqrt(6.0 / in_dim)
        else:
            limit = np.sqrt(6.0 / (in_dim + out_dim))
        w = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim), activation)

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int, activation: Activation):
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim), activation)


def _check_input(layer: DenseLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layer.in_dim or x.ndim not in (1, 2):
        raise ConfigError(f"layer expects input width {layer.in_dim}, got shape {x.shape}")
    return x


def dense_forward(layer: DenseLayer, x) -> np.ndarray:
    x = _check_input(layer, x)
    return activate(layer.activation, x @ layer.weights.T + layer.biases)


def dense_backward(layer: DenseLayer, x, upstream):
    """Gradients of a scalar loss through ``layer`` at input ``x``.

    For a batch, weight and bias gradients are summed over rows.
    Returns ``(d_input, d_weights, d_biases)``.
    """
    x = _check_input(layer, x)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != x.shape[:-1] + (layer.out_dim,):
        raise ConfigError(f"upstream gradient shape {upstream.shape} does not match layer output")
    z = x @ layer.weights.T + layer.biases
    y = activate(layer.activation, z)
    dz = upstream * activation_grad(layer.activation, z, y)
    d_input = dz @ layer.weights
    if x.ndim == 1:
        return d_input, np.outer(dz, x), dz
    return d_input, dz.T @ x, dz.sum(axis=0)


@dataclass
class DropoutLayer:
    rate: float = 0.1
    training: bool = True

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {self.rate}")


def dropout_forward(layer: DropoutLayer, x, rng: np.random.Generator | None = None):
    """Inverted dropout. Returns ``(output, mask)``; mask holds the 0/1 keep pattern."""
    x = np.asarray(x, dtype=float)
    if not layer.training or layer.rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ConfigError("dropout in training mode needs an RNG")
    mask = (rng.random(x.shape) >= layer.rate).astype(float)
    return x * mask / (1.0 - layer.rate), mask


def dropout_backward(layer: DropoutLayer, mask, upstream):
    if not layer.training or layer.rate == 0.0:
        return np.asarray(upstream, dtype=float)
    return upstream * mask / (1.0 - layer.rate)


def bce_loss(p, y):
    """Binary cross-entropy and its derivative w.r.t. ``p``, elementwise.

    ``p`` is clamped to [eps, 1 - eps] first.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ConfigError("labels must be 0 or 1")
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    loss = -(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))
    grad = (pc - y) / (pc * (1.0 - pc))
    return loss, grad


def sgd_step(params, grads, lr: float, name: str = "params") -> np.ndarray:
    """``params - lr * grads``; no momentum, no weight decay."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise ConfigError(f"{name}: parameter shape {params.shape} != gradient shape {grads.shape}")
    if lr < 0:
        raise ConfigError(f"learning rate must be non-negative, got {lr}")
    if not np.isfinite(grads).all():
        raise NumericalError(f"non-finite gradient in parameter block {name!r}")
    return params - lr * grads
