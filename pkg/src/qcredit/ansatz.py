"""Data re-uploading variational circuit (VC-DRC).

One block is an RX angle embedding of the input on every qubit followed by
``layers_per_block`` entangling layers. An entangling layer is a general
rotation ROT(phi, theta, omega) on each qubit and then a nearest-neighbour
CNOT ring. The circuit output is <Z> on every qubit.

Every angle in the circuit lives in a flat "slot" vector: the first
``n_blocks * n_qubits`` slots are the embedding angles (the input, repeated
once per block), the rest are the trainable parameters in
(block, layer, qubit, euler) order. Both the gate-list path and the batched
fast path are driven by the same slot program, so they cannot drift apart.

Gradients are exact. ``gradients`` uses the parameter-shift rule and returns
full Jacobians; ``vjp_batch`` uses a single adjoint sweep and returns the
vector-Jacobian product needed for backpropagation.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import qsim
from .errors import ConfigError
from .qsim import GateKind, GateOp

SHIFT = math.pi / 2

# Memory cap for the parameter-shift batch, in amplitudes.
_MAX_SHIFT_AMPS = 1 << 22


@dataclass(frozen=True)
class AnsatzConfig:
    n_qubits: int
    n_blocks: int = 1
    layers_per_block: int = 1
    ring: bool = True

    def __post_init__(self):
        qsim.check_n_qubits(self.n_qubits)
        if self.n_blocks < 1 or self.layers_per_block < 1:
            raise ConfigError(
                f"n_blocks and layers_per_block must be >= 1, got {self.n_blocks}, {self.layers_per_block}"
            )

    @property
    def n_params(self) -> int:
        return self.n_blocks * self.layers_per_block * self.n_qubits * 3

    @property
    def n_embed_slots(self) -> int:
        return self.n_blocks * self.n_qubits

    @property
    def n_slots(self) -> int:
        return self.n_embed_slots + self.n_params

    @property
    def param_shape(self) -> tuple[int, int, int, int]:
        return (self.n_blocks, self.layers_per_block, self.n_qubits, 3)


def entangler_pairs(n_qubits: int, ring: bool = True) -> list[tuple[int, int]]:
    if n_qubits == 1:
        return []
    if n_qubits == 2:
        return [(0, 1)]
    pairs = [(i, i + 1) for i in range(n_qubits - 1)]
    if ring:
        pairs.append((n_qubits - 1, 0))
    return pairs


@functools.lru_cache(maxsize=None)
def program(cfg: AnsatzConfig) -> tuple[tuple, ...]:
    """Ordered ops ``("rx", qubit, slot)``, ``("rot", qubit, first_slot)``, ``("cnot", c, t)``."""
    n = cfg.n_qubits
    ops = []
    pairs = entangler_pairs(n, cfg.ring)
    for b in range(cfg.n_blocks):
        for i in range(n):
            ops.append(("rx", i, b * n + i))
        for l in range(cfg.layers_per_block):
            base = cfg.n_embed_slots + ((b * cfg.layers_per_block + l) * n) * 3
            for i in range(n):
                ops.append(("rot", i, base + 3 * i))
            for c, t in pairs:
                ops.append(("cnot", c, t))
    return tuple(ops)


def _as_input(cfg: AnsatzConfig, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ConfigError(f"input must be a vector, got shape {x.shape}")
    if x.shape[0] > cfg.n_qubits:
        raise ConfigError(f"input length: expected at most {cfg.n_qubits}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("input angles must be finite")
    if x.shape[0] < cfg.n_qubits:
        x = np.concatenate([x, np.zeros(cfg.n_qubits - x.shape[0])])
    return x


def _as_params(cfg: AnsatzConfig, params) -> np.ndarray:
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.shape[0] != cfg.n_params:
        raise ConfigError(f"parameter count: expected {cfg.n_params}, got {params.shape[0]}")
    if not np.all(np.isfinite(params)):
        raise ConfigError("parameters must be finite")
    return params


def _as_batch(cfg: AnsatzConfig, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cfg.n_qubits:
        raise ConfigError(f"batch input: expected shape (S, {cfg.n_qubits}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ConfigError("input angles must be finite")
    return X


def slot_angles(cfg: AnsatzConfig, X: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Per-sample slot vectors, shape (S, n_slots)."""
    S = X.shape[0]
    emb = np.tile(X, (1, cfg.n_blocks))
    return np.concatenate([emb, np.broadcast_to(params, (S, cfg.n_params))], axis=1)


def build_circuit(cfg: AnsatzConfig, x, params) -> list[GateOp]:
    x = _as_input(cfg, x)
    params = _as_params(cfg, params)
    slots = slot_angles(cfg, x[None, :], params)[0]
    gates = []
    for op, a, b in program(cfg):
        if op == "rx":
            gates.append(GateOp(GateKind.RX, a, angles=(slots[b],)))
        elif op == "rot":
            gates.append(GateOp(GateKind.ROT, a, angles=tuple(slots[b:b + 3])))
        else:
            gates.append(GateOp(GateKind.CNOT, b, control=a))
    return gates


def forward(cfg: AnsatzConfig, x, params) -> np.ndarray:
    """<Z_q> for each qubit after running the circuit on |0...0>."""
    state = qsim.new_zero_state(cfg.n_qubits)
    qsim.run_gates(state, build_circuit(cfg, x, params))
    return qsim.expectation_z_all(state)


def _gate_matrices(cfg: AnsatzConfig, slots: np.ndarray, derivatives: bool = False):
    """Per-gate matrix stacks, indexed by gate: rx (E, S, 2, 2), rot (R, S, 2, 2)."""
    E = cfg.n_embed_slots
    S = slots.shape[0]
    emb = np.ascontiguousarray(slots[:, :E].T)
    rot = slots[:, E:].reshape(S, -1, 3).transpose(2, 1, 0)
    mats = (qsim.rx_matrix(emb), qsim.rot_matrix(rot[0], rot[1], rot[2]))
    if not derivatives:
        return mats
    d_rx = qsim.rx_derivative(emb)[:, None]
    d_rot = np.ascontiguousarray(np.moveaxis(qsim.rot_derivatives(rot[0], rot[1], rot[2]), 0, 1))
    return mats + (d_rx, d_rot)


def run_slots(cfg: AnsatzConfig, slots: np.ndarray, until: str | None = None, mats=None) -> np.ndarray:
    """Run the circuit for each row of ``slots``; returns final states (S, 2**n).

    ``until="embedding"`` stops after the first embedding layer (used for timing).
    """
    amps = qsim.zero_states(slots.shape[0], cfg.n_qubits)
    rx, rot = mats if mats is not None else _gate_matrices(cfg, slots)
    E = cfg.n_embed_slots
    ops = program(cfg)
    if until == "embedding":
        ops = ops[: cfg.n_qubits]
    for op, a, b in ops:
        if op == "rx":
            qsim.apply_1q(amps, rx[b], a)
        elif op == "rot":
            qsim.apply_1q(amps, rot[(b - E) // 3], a)
        else:
            qsim.apply_cnot(amps, a, b)
    return amps


def forward_batch(cfg: AnsatzConfig, X, params) -> np.ndarray:
    return forward_states(cfg, X, params)[0]


def forward_states(cfg: AnsatzConfig, X, params):
    """Expectations (S, n) together with the final states (S, 2**n)."""
    X = _as_batch(cfg, X)
    params = _as_params(cfg, params)
    psi = run_slots(cfg, slot_angles(cfg, X, params))
    return qsim.expectations_z(psi), psi


def _fold_slot_grads(cfg: AnsatzConfig, g: np.ndarray):
    """Split slot gradients (..., n_slots) into (d_params, d_x); d_x sums over blocks."""
    emb = g[..., : cfg.n_embed_slots]
    d_x = emb.reshape(emb.shape[:-1] + (cfg.n_blocks, cfg.n_qubits)).sum(axis=-2)
    return g[..., cfg.n_embed_slots:], d_x


def jacobian_batch(cfg: AnsatzConfig, X, params):
    """Parameter-shift Jacobians for a batch.

    Returns ``(d_exp/d_params, d_exp/d_x)`` with shapes (S, n, P) and (S, n, n).
    """
    X = _as_batch(cfg, X)
    params = _as_params(cfg, params)
    base = slot_angles(cfg, X, params)
    S, G = base.shape
    n = cfg.n_qubits
    jac = np.empty((S, n, G))
    per_sample = 2 * G * (1 << n)
    chunk = max(1, _MAX_SHIFT_AMPS // per_sample)
    shifts = np.concatenate([np.eye(G), -np.eye(G)]) * SHIFT
    for lo in range(0, S, chunk):
        blk = base[lo:lo + chunk]
        shifted = (blk[:, None, :] + shifts[None, :, :]).reshape(-1, G)
        ev = qsim.expectations_z(run_slots(cfg, shifted)).reshape(blk.shape[0], 2, G, n)
        jac[lo:lo + chunk] = np.transpose((ev[:, 0] - ev[:, 1]) / 2, (0, 2, 1))
    return _fold_slot_grads(cfg, jac)


def gradients(cfg: AnsatzConfig, x, params):
    """Parameter-shift Jacobians for one input: shapes (n, P) and (n, n)."""
    x = _as_input(cfg, x)
    d_params, d_x = jacobian_batch(cfg, x[None, :], params)
    return d_params[0], d_x[0]


def vjp_batch(cfg: AnsatzConfig, X, params, upstream, method: str = "adjoint", final_states=None):
    """Expectations and vector-Jacobian products for a batch.

    ``upstream`` has shape (S, n): dL/d<Z_q> per sample. ``final_states`` may
    pass in the states from an earlier ``forward_states`` call to skip the
    forward simulation; the array is overwritten. Returns
    ``(expectations (S, n), d_params summed over the batch (P,), d_x (S, n))``.
    """
    X = _as_batch(cfg, X)
    params = _as_params(cfg, params)
    upstream = np.asarray(upstream, dtype=float)
    if method == "parameter-shift":
        exp = forward_batch(cfg, X, params)
        jp, jx = jacobian_batch(cfg, X, params)
        return exp, np.einsum("sq,sqp->p", upstream, jp), np.einsum("sq,sqi->si", upstream, jx)
    if method != "adjoint":
        raise ConfigError(f"unknown differentiation method {method!r}")

    slots = slot_angles(cfg, X, params)
    rx, rot, d_rx, d_rot = _gate_matrices(cfg, slots, derivatives=True)
    psi = run_slots(cfg, slots, mats=(rx, rot)) if final_states is None else final_states
    exp = qsim.expectations_z(psi)
    lam = psi * qsim.weighted_z_diagonal(upstream, cfg.n_qubits)
    grads = np.zeros_like(slots)
    E = cfg.n_embed_slots
    for op, a, b in reversed(program(cfg)):
        if op == "cnot":
            qsim.apply_cnot(psi, a, b)
            qsim.apply_cnot(lam, a, b)
            continue
        if op == "rx":
            mat, dmats, width = rx[b], d_rx[b], 1
        else:
            r = (b - E) // 3
            mat, dmats, width = rot[r], d_rot[r], 3
        inv = np.conj(np.swapaxes(mat, -1, -2))
        qsim.apply_1q(psi, inv, a)
        # d<H>/d(angle) = 2 Re <lam| dU |psi_before>
        grads[:, b:b + width] = qsim.sandwich(lam, psi, dmats, a)
        qsim.apply_1q(lam, inv, a)
    d_params, d_x = _fold_slot_grads(cfg, grads)
    return exp, d_params.sum(axis=0), d_x
