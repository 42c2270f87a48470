"""The full-hybrid classifier and its classical counterpart.

FH:  x -> master(ReLU) -> dropout -> feeding(ReLU) -> dropout -> VC-DRC circuit
        -> <Z> per qubit -> decision(sigmoid) -> p
CC:  same scaffold, with a tanh dense layer of width n_qubits in place of the
     circuit.

All passes operate on a batch of rows. Gradients returned by the backward
passes are keyed by tensor name (see ``tensor_names``) and are sums over the
batch of the per-row upstream gradients.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar

import numpy as np

from . import ansatz
from .ansatz import AnsatzConfig
from .errors import ConfigError, NumericalError
from .nn import (
    Activation,
    DenseLayer,
    DropoutLayer,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
)

N_FEATURES = 21
CHECKPOINT_VERSION = 1


@dataclass
class FHModel:
    master: DenseLayer
    feeding: DenseLayer
    ansatz: AnsatzConfig
    qparams: np.ndarray
    decision: DenseLayer
    dropout: float = 0.1
    kind: ClassVar[str] = "fh"

    def __post_init__(self):
        self.qparams = np.asarray(self.qparams, dtype=float).reshape(-1)
        _check_scaffold(self.master, self.feeding, self.ansatz.n_qubits)
        if self.qparams.shape[0] != self.ansatz.n_params:
            raise ConfigError(f"expected {self.ansatz.n_params} quantum parameters, got {self.qparams.shape[0]}")
        if self.decision.in_dim != self.ansatz.n_qubits or self.decision.out_dim != 1:
            raise ConfigError("decision layer must map n_qubits -> 1")

    @property
    def n_qubits(self) -> int:
        return self.ansatz.n_qubits


@dataclass
class CCModel:
    master: DenseLayer
    feeding: DenseLayer
    surrogate: DenseLayer
    decision: DenseLayer
    dropout: float = 0.1
    kind: ClassVar[str] = "cc"

    def __post_init__(self):
        _check_scaffold(self.master, self.feeding, self.surrogate.in_dim)
        if self.surrogate.out_dim != self.surrogate.in_dim:
            raise ConfigError("surrogate layer must be square")
        if self.decision.in_dim != self.surrogate.out_dim or self.decision.out_dim != 1:
            raise ConfigError("decision layer must map n_qubits -> 1")

    @property
    def n_qubits(self) -> int:
        return self.surrogate.in_dim


def _check_scaffold(master, feeding, width):
    if master.out_dim != master.in_dim:
        raise ConfigError("master layer width must equal the feature count")
    if feeding.in_dim != master.out_dim or feeding.out_dim != width:
        raise ConfigError(f"feeding layer must map {master.out_dim} -> {width}")


QPARAM_INIT_SCALE = 0.1


def init_qparams(n_params, rng, scheme="normal"):
    if scheme == "uniform":
        return rng.uniform(0.0, 2 * np.pi, size=n_params)
    if scheme == "normal":
        return rng.normal(0.0, QPARAM_INIT_SCALE, size=n_params)
    if scheme == "zeros":
        return np.zeros(n_params)
    raise ConfigError(f"unknown quantum init scheme {scheme!r}")


def build_fh(n_qubits, n_blocks=1, layers_per_block=1, rng=None, n_features=N_FEATURES,
             dropout=0.1, ring=True, init="random", qinit="normal"):
    """New FH model. ``init="zeros"`` gives all-zero weights and angles."""
    cfg = AnsatzConfig(n_qubits, n_blocks, layers_per_block, ring)
    if init == "zeros":
        return FHModel(
            DenseLayer.zeros(n_features, n_features, Activation.RELU),
            DenseLayer.zeros(n_features, n_qubits, Activation.RELU),
            cfg,
            np.zeros(cfg.n_params),
            DenseLayer.zeros(n_qubits, 1, Activation.SIGMOID),
            dropout,
        )
    rng = np.random.default_rng(rng)
    return FHModel(
        DenseLayer.init(n_features, n_features, Activation.RELU, rng),
        DenseLayer.init(n_features, n_qubits, Activation.RELU, rng),
        cfg,
        init_qparams(cfg.n_params, rng, qinit),
        DenseLayer.init(n_qubits, 1, Activation.SIGMOID, rng),
        dropout,
    )


def build_cc(n_qubits, rng=None, n_features=N_FEATURES, dropout=0.1, init="random"):
    if init == "zeros":
        return CCModel(
            DenseLayer.zeros(n_features, n_features, Activation.RELU),
            DenseLayer.zeros(n_features, n_qubits, Activation.RELU),
            DenseLayer.zeros(n_qubits, n_qubits, Activation.TANH),
            DenseLayer.zeros(n_qubits, 1, Activation.SIGMOID),
            dropout,
        )
    rng = np.random.default_rng(rng)
    return CCModel(
        DenseLayer.init(n_features, n_features, Activation.RELU, rng),
        DenseLayer.init(n_features, n_qubits, Activation.RELU, rng),
        DenseLayer.init(n_qubits, n_qubits, Activation.TANH, rng),
        DenseLayer.init(n_qubits, 1, Activation.SIGMOID, rng),
        dropout,
    )


def _layers(model):
    if isinstance(model, FHModel):
        return {"master": model.master, "feeding": model.feeding, "decision": model.decision}
    return {"master": model.master, "feeding": model.feeding,
            "surrogate": model.surrogate, "decision": model.decision}


def tensors(model) -> dict[str, np.ndarray]:
    """Every trainable tensor, keyed by name. The arrays are the model's own."""
    out = {}
    for name, layer in _layers(model).items():
        out[f"{name}.weights"] = layer.weights
        out[f"{name}.biases"] = layer.biases
    if isinstance(model, FHModel):
        out["quantum.params"] = model.qparams
    return out


def tensor_names(model) -> list[str]:
    return list(tensors(model))


def set_tensor(model, name: str, value: np.ndarray) -> None:
    if name == "quantum.params":
        model.qparams = value
        return
    layer_name, attr = name.split(".")
    setattr(_layers(model)[layer_name], attr, value)


def copy_model(model):
    return load_state(model_meta(model), {k: v.copy() for k, v in tensors(model).items()})


def param_count(model) -> dict[str, int]:
    counts = {name: layer.n_params for name, layer in _layers(model).items()}
    counts["classical"] = sum(counts.values())
    counts["quantum"] = model.ansatz.n_params if isinstance(model, FHModel) else 0
    counts["total"] = counts["classical"] + counts["quantum"]
    return counts


# --- forward / backward ------------------------------------------------------


@dataclass
class ForwardCache:
    x: np.ndarray
    h_master: np.ndarray
    mask1: np.ndarray
    d_master: np.ndarray
    h_feeding: np.ndarray
    mask2: np.ndarray
    d_feeding: np.ndarray
    middle: np.ndarray  # <Z> expectations (FH) or surrogate output (CC)
    p: np.ndarray
    training: bool
    states: np.ndarray | None = field(default=None, repr=False)


def _finite(name, arr):
    if not np.isfinite(arr).all():
        raise NumericalError(f"non-finite values in layer {name!r}")
    return arr


def _as_rows(model, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.master.in_dim:
        raise ConfigError(f"expected {model.master.in_dim} features, got {X.shape[1]}")
    return X, single


def _scaffold_forward(model, X, training, rng):
    drop = DropoutLayer(model.dropout, training)
    h1 = _finite("master", dense_forward(model.master, X))
    d1, m1 = dropout_forward(drop, h1, rng)
    h2 = _finite("feeding", dense_forward(model.feeding, d1))
    d2, m2 = dropout_forward(drop, h2, rng)
    return h1, m1, d1, h2, m2, d2


def forward(model, X, training: bool = False, rng=None):
    """Probabilities (S,) and the cache needed by ``backward``."""
    X, _ = _as_rows(model, X)
    h1, m1, d1, h2, m2, d2 = _scaffold_forward(model, X, training, rng)
    states = None
    if isinstance(model, FHModel):
        middle, states = ansatz.forward_states(model.ansatz, d2, model.qparams)
        _finite("quantum", middle)
        if not training:
            states = None
    else:
        middle = _finite("surrogate", dense_forward(model.surrogate, d2))
    p = _finite("decision", dense_forward(model.decision, middle))[:, 0]
    return p, ForwardCache(X, h1, m1, d1, h2, m2, d2, middle, p, training, states)


def backward(model, cache: ForwardCache | None, d_p, frozen=(), diff_method: str = "adjoint"):
    """Gradients of the loss for every trainable tensor.

    ``d_p`` is dL/dp per row. Tensors listed in ``frozen`` (names or layer
    prefixes such as ``"quantum"``) get zero gradients.
    """
    if cache is None:
        raise ConfigError("backward needs the cache from a forward pass")
    d_p = np.asarray(d_p, dtype=float).reshape(-1, 1)
    drop = DropoutLayer(model.dropout, cache.training)
    grads = {}
    d_mid, grads["decision.weights"], grads["decision.biases"] = dense_backward(
        model.decision, cache.middle, d_p)
    if isinstance(model, FHModel):
        states = None if cache.states is None else cache.states.copy()
        _, d_q, d_d2 = ansatz.vjp_batch(model.ansatz, cache.d_feeding, model.qparams, d_mid,
                                       method=diff_method, final_states=states)
        grads["quantum.params"] = d_q
    else:
        d_d2, grads["surrogate.weights"], grads["surrogate.biases"] = dense_backward(
            model.surrogate, cache.d_feeding, d_mid)
    d_h2 = dropout_backward(drop, cache.mask2, d_d2)
    d_d1, grads["feeding.weights"], grads["feeding.biases"] = dense_backward(model.feeding, cache.d_master, d_h2)
    d_h1 = dropout_backward(drop, cache.mask1, d_d1)
    _, grads["master.weights"], grads["master.biases"] = dense_backward(model.master, cache.x, d_h1)
    for name in grads:
        if name in frozen or name.split(".")[0] in frozen:
            grads[name] = np.zeros_like(grads[name])
    return {name: grads[name] for name in tensor_names(model)}


def predict(model, X) -> np.ndarray:
    """EVAL-mode probabilities."""
    return forward(model, X, training=False)[0]


def _forward_rows(model, features, mode, rng):
    # a single feature vector gives a float probability
    X, single = _as_rows(model, features)
    p, cache = forward(model, X, training=(mode == "train"), rng=rng)
    return (float(p[0]) if single else p), cache


def fh_forward(model: FHModel, features, mode="eval", rng=None):
    if not isinstance(model, FHModel):
        raise ConfigError("fh_forward needs an FHModel")
    return _forward_rows(model, features, mode, rng)


def cc_forward(model: CCModel, features, mode="eval", rng=None):
    if not isinstance(model, CCModel):
        raise ConfigError("cc_forward needs a CCModel")
    return _forward_rows(model, features, mode, rng)


def fh_backward(model: FHModel, cache, d_p, frozen=(), diff_method="adjoint"):
    return backward(model, cache, d_p, frozen, diff_method)


def cc_backward(model: CCModel, cache, d_p, frozen=()):
    return backward(model, cache, d_p, frozen)


# --- persistence -------------------------------------------------------------


def model_meta(model) -> dict:
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "n_features": model.master.in_dim,
        "n_qubits": model.n_qubits,
        "dropout": model.dropout,
    }
    if isinstance(model, FHModel):
        meta["ansatz"] = {
            "n_qubits": model.ansatz.n_qubits,
            "n_blocks": model.ansatz.n_blocks,
            "layers_per_block": model.ansatz.layers_per_block,
            "ring": model.ansatz.ring,
        }
    return meta


def load_state(meta: dict, arrays: dict):
    if meta.get("format_version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {meta.get('format_version')!r}")

    def layer(name, act):
        return DenseLayer(arrays[f"{name}.weights"], arrays[f"{name}.biases"], act)

    master = layer("master", Activation.RELU)
    feeding = layer("feeding", Activation.RELU)
    decision = layer("decision", Activation.SIGMOID)
    if meta["kind"] == "fh":
        cfg = AnsatzConfig(**meta["ansatz"])
        return FHModel(master, feeding, cfg, arrays["quantum.params"], decision, meta["dropout"])
    if meta["kind"] == "cc":
        return CCModel(master, feeding, layer("surrogate", Activation.TANH), decision, meta["dropout"])
    raise ConfigError(f"unknown model kind {meta['kind']!r}")


def save_checkpoint(model, path, seed=None, config=None) -> Path:
    """Write all tensors plus a JSON header to an ``.npz`` file."""
    path = Path(path)
    meta = model_meta(model)
    meta["seed"] = seed
    meta["config"] = config
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **tensors(model))
    return path


def load_checkpoint(path):
    """Returns ``(model, meta)``."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    return load_state(meta, arrays), meta
