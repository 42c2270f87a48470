import numpy as np
import pytest

import oracle
from qcredit import model as M
from qcredit.errors import ConfigError, NumericalError
from qcredit.nn import bce_loss


def loss_fn(model, X, y, training=False, seed=0):
    p, _ = M.forward(model, X, training=training, rng=np.random.default_rng(seed) if training else None)
    return float(bce_loss(p, y)[0].sum())


def jitter_biases(model, rng):
    # keep ReLU pre-activations away from the kink at exactly 0
    for name, t in M.tensors(model).items():
        if name.endswith("biases"):
            M.set_tensor(model, name, rng.uniform(0.05, 0.2, t.shape))


def check_gradients(model, X, y, training=False, tol=1e-5):
    jitter_biases(model, np.random.default_rng(1))
    p, cache = M.forward(model, X, training=training, rng=np.random.default_rng(0) if training else None)
    grads = M.backward(model, cache, bce_loss(p, y)[1])
    for name, t in M.tensors(model).items():
        def f(v, name=name, orig=t):
            M.set_tensor(model, name, v.reshape(orig.shape))
            out = loss_fn(model, X, y, training)
            M.set_tensor(model, name, orig)
            return out
        fd = oracle.central_diff(f, t.ravel()).reshape(t.shape)
        err = np.abs(grads[name] - fd).max() / max(np.abs(fd).max(), 1e-8)
        assert err < tol, f"{name}: relative error {err:.2e}"


@pytest.mark.parametrize("blocks", [1, 2])
def test_fh_gradients_eval_mode(blocks, rng):
    model = M.build_fh(3, blocks, 1, rng, n_features=5)
    X = rng.standard_normal((4, 5))
    check_gradients(model, X, np.array([0, 1, 1, 0]))


def test_fh_gradients_with_dropout_mask(rng):
    model = M.build_fh(3, 1, 1, rng, n_features=5, dropout=0.3)
    check_gradients(model, rng.standard_normal((4, 5)), np.array([1, 0, 1, 0]), training=True)


def test_cc_gradients(rng):
    model = M.build_cc(4, rng, n_features=6)
    check_gradients(model, rng.standard_normal((5, 6)), np.array([0, 1, 0, 1, 1]))


def test_parameter_shift_backward_matches_adjoint(rng):
    model = M.build_fh(3, 2, 1, rng, n_features=5)
    X = rng.standard_normal((3, 5))
    p, cache = M.forward(model, X)
    a = M.backward(model, cache, np.ones(3))
    b = M.backward(model, cache, np.ones(3), diff_method="parameter-shift")
    for k in a:
        assert np.allclose(a[k], b[k], atol=1e-12)


def test_frozen_blocks_get_zero(rng):
    model = M.build_fh(3, 1, 1, rng, n_features=5)
    p, cache = M.forward(model, rng.standard_normal((2, 5)))
    g = M.backward(model, cache, np.ones(2), frozen=("quantum", "master.biases"))
    assert not g["quantum.params"].any() and not g["master.biases"].any()
    assert g["master.weights"].any()


def test_zero_model_outputs_half():
    model = M.build_fh(3, 1, 1, init="zeros", n_features=4)
    assert M.fh_forward(model, np.ones(4))[0] == 0.5


def test_param_counts():
    c = M.param_count(M.build_fh(6, 2, 1, 0))
    assert c["master"] == 21 * 21 + 21
    assert c["feeding"] == 21 * 6 + 6
    assert c["decision"] == 7
    assert c["quantum"] == 2 * 6 * 3
    assert c["total"] == c["classical"] + c["quantum"]
    cc = M.param_count(M.build_cc(6, 0))
    assert cc["surrogate"] == 42 and cc["quantum"] == 0


def test_forward_deterministic_in_eval(rng):
    model = M.build_fh(4, 1, 1, rng)
    X = rng.standard_normal((3, 21))
    assert np.array_equal(M.predict(model, X), M.predict(model, X))


def test_training_mode_needs_rng(rng):
    model = M.build_cc(3, rng)
    with pytest.raises(ConfigError):
        M.forward(model, np.zeros((1, 21)), training=True)


def test_wrong_feature_count(rng):
    with pytest.raises(ConfigError, match="expected 21 features"):
        M.predict(M.build_fh(3, 1, 1, rng), np.zeros((1, 20)))


def test_non_finite_names_layer(rng):
    model = M.build_fh(3, 1, 1, rng)
    model.master.weights[0, 0] = np.inf
    with pytest.raises(NumericalError, match="master"):
        M.predict(model, np.ones((1, 21)))


def test_dispatch_type_checks(rng):
    with pytest.raises(ConfigError):
        M.fh_forward(M.build_cc(3, rng), np.zeros(21))
    with pytest.raises(ConfigError):
        M.cc_forward(M.build_fh(3, 1, 1, rng), np.zeros(21))


@pytest.mark.parametrize("kind", ["fh", "cc"])
def test_checkpoint_round_trip(kind, rng, tmp_path):
    model = M.build_fh(4, 2, 1, rng) if kind == "fh" else M.build_cc(4, rng)
    X = rng.standard_normal((7, 21))
    path = M.save_checkpoint(model, tmp_path / "m.npz", seed=3, config={"a": 1})
    loaded, meta = M.load_checkpoint(path)
    assert meta["seed"] == 3 and meta["config"] == {"a": 1} and meta["kind"] == kind
    assert np.array_equal(M.predict(loaded, X), M.predict(model, X))


def test_checkpoint_version_checked(rng, tmp_path):
    meta = M.model_meta(M.build_cc(3, rng))
    meta["format_version"] = 99
    with pytest.raises(ConfigError, match="version"):
        M.load_state(meta, {})


def test_copy_is_independent(rng):
    model = M.build_fh(3, 1, 1, rng)
    twin = M.copy_model(model)
    model.qparams[0] += 1
    assert twin.qparams[0] != model.qparams[0]


def test_zero_cc_outputs_half():
    assert M.cc_forward(M.build_cc(4, init="zeros"), np.ones(21))[0] == 0.5


def test_zero_upstream_zero_gradients(rng):
    model = M.build_fh(3, 1, 1, rng)
    p, cache = M.forward(model, rng.standard_normal((3, 21)))
    assert not any(g.any() for g in M.backward(model, cache, np.zeros(3)).values())


def test_freezing_quantum_leaves_classical_unchanged(rng):
    model = M.build_fh(3, 2, 1, rng)
    p, cache = M.forward(model, rng.standard_normal((3, 21)))
    full = M.backward(model, cache, np.ones(3))
    frozen = M.backward(model, cache, np.ones(3), frozen=("quantum",))
    for k in full:
        if k != "quantum.params":
            assert np.array_equal(full[k], frozen[k])


def test_forward_composes_modules(rng):
    from qcredit import ansatz
    from qcredit.nn import dense_forward
    model = M.build_fh(4, 2, 1, rng)
    x = rng.standard_normal(21)
    h = dense_forward(model.feeding, dense_forward(model.master, x))
    z = ansatz.forward(model.ansatz, h, model.qparams)
    ref = dense_forward(model.decision, z)[0]
    assert abs(M.fh_forward(model, x)[0] - ref) < 1e-12


def test_probabilities_inside_unit_interval(rng):
    model = M.build_cc(3, rng)
    model.decision.biases[:] = 50.0
    p = M.predict(model, rng.standard_normal((5, 21)))
    assert np.all((p > 0) & (p <= 1))
