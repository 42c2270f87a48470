"""Dense statevector simulator.

Bit order is little-endian: qubit ``q`` is bit ``q`` of the basis-state index,
so ``|q1 q0> = |01>`` (qubit 0 set) is amplitude index 1.

Gates are applied in place by pairing amplitudes that differ only in the
target bit. The kernels accept a leading batch axis, ``amps`` of shape
``(S, 2**n)``, where every state in the batch may carry its own gate matrix.
A full ``2**n x 2**n`` unitary is never built here; the pair loops are
compiled with numba.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError

MAX_QUBITS = 20


class GateKind(str, enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    ROT = "ROT"
    CNOT = "CNOT"


_N_ANGLES = {GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.ROT: 3, GateKind.CNOT: 0}


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    target: int
    control: int | None = None
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.angles) != _N_ANGLES[kind]:
            raise ConfigError(
                f"{kind.value} takes {_N_ANGLES[kind]} angle(s), got {len(self.angles)}"
            )
        if kind is GateKind.CNOT:
            if self.control is None or self.control == self.target:
                raise ConfigError("CNOT needs a control distinct from its target")
        elif self.control is not None:
            raise ConfigError(f"{kind.value} takes no control qubit")
        if any(math.isnan(a) for a in self.angles):
            raise ConfigError(f"NaN angle in {kind.value} gate on qubit {self.target}")

    def qubits(self):
        return (self.target,) if self.control is None else (self.control, self.target)

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a single-qubit gate (CNOT has none)."""
        if self.kind is GateKind.CNOT:
            raise ConfigError("CNOT is not a single-qubit gate")
        a = np.asarray(self.angles)
        if self.kind is GateKind.ROT:
            return rot_matrix(a[0], a[1], a[2])
        return {GateKind.RX: rx_matrix, GateKind.RY: ry_matrix, GateKind.RZ: rz_matrix}[self.kind](a[0])


# --- gate matrices -----------------------------------------------------------
# All builders broadcast: an angle array of shape (S,) gives matrices (S, 2, 2).


def rx_matrix(theta):
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    m = np.empty(theta.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = -1j * s
    m[..., 1, 0] = -1j * s
    m[..., 1, 1] = c
    return m


def ry_matrix(theta):
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    m = np.empty(theta.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 0, 1] = -s
    m[..., 1, 0] = s
    m[..., 1, 1] = c
    return m


def rz_matrix(theta):
    theta = np.asarray(theta, dtype=float)
    m = np.zeros(theta.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = np.exp(-0.5j * theta)
    m[..., 1, 1] = np.exp(0.5j * theta)
    return m


def rot_matrix(phi, theta, omega):
    """Rz(omega) @ Ry(theta) @ Rz(phi)."""
    phi, theta, omega = (np.asarray(v, dtype=float) for v in (phi, theta, omega))
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    m = np.empty(np.broadcast(phi, theta, omega).shape + (2, 2), dtype=complex)
    m[..., 0, 0] = np.exp(-0.5j * (phi + omega)) * c
    m[..., 0, 1] = -np.exp(0.5j * (phi - omega)) * s
    m[..., 1, 0] = np.exp(-0.5j * (phi - omega)) * s
    m[..., 1, 1] = np.exp(0.5j * (phi + omega)) * c
    return m


def rot_derivatives(phi, theta, omega):
    """Partial derivatives of ``rot_matrix`` w.r.t. (phi, theta, omega), stacked on axis 0."""
    phi, theta, omega = (np.asarray(v, dtype=float) for v in (phi, theta, omega))
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    ep = np.exp(-0.5j * (phi + omega))
    em = np.exp(0.5j * (phi - omega))
    shape = np.broadcast(phi, theta, omega).shape
    d = np.empty((3,) + shape + (2, 2), dtype=complex)
    # d/dphi and d/domega only touch the phases.
    d[0, ..., 0, 0] = -0.5j * ep * c
    d[0, ..., 0, 1] = -0.5j * em * s
    d[0, ..., 1, 0] = -0.5j * np.conj(em) * s
    d[0, ..., 1, 1] = 0.5j * np.conj(ep) * c
    d[1, ..., 0, 0] = -0.5 * ep * s
    d[1, ..., 0, 1] = -0.5 * em * c
    d[1, ..., 1, 0] = 0.5 * np.conj(em) * c
    d[1, ..., 1, 1] = -0.5 * np.conj(ep) * s
    d[2, ..., 0, 0] = -0.5j * ep * c
    d[2, ..., 0, 1] = 0.5j * em * s
    d[2, ..., 1, 0] = 0.5j * np.conj(em) * s
    d[2, ..., 1, 1] = 0.5j * np.conj(ep) * c
    return d


def rx_derivative(theta):
    theta = np.asarray(theta, dtype=float)
    c = 0.5 * np.cos(theta / 2)
    s = 0.5 * np.sin(theta / 2)
    m = np.empty(theta.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = -s
    m[..., 0, 1] = -1j * c
    m[..., 1, 0] = -1j * c
    m[..., 1, 1] = -s
    return m


# --- batched kernels ---------------------------------------------------------


@njit(cache=True)
def _k_apply_1q(src, dst, mats, target):
    S, D = src.shape
    stride = 1 << target
    for s in range(S):
        m00 = mats[s, 0, 0]
        m01 = mats[s, 0, 1]
        m10 = mats[s, 1, 0]
        m11 = mats[s, 1, 1]
        for base in range(0, D, 2 * stride):
            for j in range(base, base + stride):
                a0 = src[s, j]
                a1 = src[s, j + stride]
                dst[s, j] = m00 * a0 + m01 * a1
                dst[s, j + stride] = m10 * a0 + m11 * a1


@njit(cache=True)
def _k_apply_cnot(amps, control, target):
    # visit only indices with the control bit set and the target bit clear
    S, D = amps.shape
    cbit = 1 << control
    tbit = 1 << target
    lo = min(control, target)
    hi = max(control, target)
    for s in range(S):
        for r in range(D >> 2):
            # insert zero bits at positions lo and hi
            k = r & ((1 << lo) - 1)
            k |= ((r >> lo) << (lo + 1)) & ((1 << hi) - 1)
            k |= (r >> (hi - 1)) << (hi + 1)
            k |= cbit
            tmp = amps[s, k]
            amps[s, k] = amps[s, k | tbit]
            amps[s, k | tbit] = tmp


@njit(cache=True)
def _k_expectations_z(amps, n):
    S, D = amps.shape
    out = np.zeros((S, n))
    for s in range(S):
        for k in range(D):
            a = amps[s, k]
            p = a.real * a.real + a.imag * a.imag
            for q in range(n):
                if (k >> q) & 1:
                    out[s, q] -= p
                else:
                    out[s, q] += p
    return out


@njit(cache=True)
def _k_sandwich1(bra, ket, d00, d01, d10, d11, s, stride):
    D = ket.shape[1]
    acc = 0.0
    for base in range(0, D, 2 * stride):
        for j in range(base, base + stride):
            a0 = ket[s, j]
            a1 = ket[s, j + stride]
            v = bra[s, j].conjugate() * (d00 * a0 + d01 * a1) \
                + bra[s, j + stride].conjugate() * (d10 * a0 + d11 * a1)
            acc += v.real
    return acc


@njit(cache=True)
def _k_sandwich3(bra, ket, m, s, stride):
    # three matrices in one pass over the state
    D = ket.shape[1]
    a00, a01, a10, a11 = m[0, s, 0, 0], m[0, s, 0, 1], m[0, s, 1, 0], m[0, s, 1, 1]
    b00, b01, b10, b11 = m[1, s, 0, 0], m[1, s, 0, 1], m[1, s, 1, 0], m[1, s, 1, 1]
    c00, c01, c10, c11 = m[2, s, 0, 0], m[2, s, 0, 1], m[2, s, 1, 0], m[2, s, 1, 1]
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    for base in range(0, D, 2 * stride):
        for j in range(base, base + stride):
            k0 = ket[s, j]
            k1 = ket[s, j + stride]
            u0 = bra[s, j].conjugate()
            u1 = bra[s, j + stride].conjugate()
            acc0 += (u0 * (a00 * k0 + a01 * k1) + u1 * (a10 * k0 + a11 * k1)).real
            acc1 += (u0 * (b00 * k0 + b01 * k1) + u1 * (b10 * k0 + b11 * k1)).real
            acc2 += (u0 * (c00 * k0 + c01 * k1) + u1 * (c10 * k0 + c11 * k1)).real
    return acc0, acc1, acc2


@njit(cache=True)
def _k_sandwich(bra, ket, dmats, target):
    # 2 Re <bra| D_k |ket> for each stacked matrix D_k acting on target; shape (S, K)
    K = dmats.shape[0]
    S = ket.shape[0]
    stride = 1 << target
    out = np.zeros((S, K))
    for s in range(S):
        if K == 3:
            r0, r1, r2 = _k_sandwich3(bra, ket, dmats, s, stride)
            out[s, 0] = 2.0 * r0
            out[s, 1] = 2.0 * r1
            out[s, 2] = 2.0 * r2
        else:
            for kk in range(K):
                out[s, kk] = 2.0 * _k_sandwich1(bra, ket, dmats[kk, s, 0, 0], dmats[kk, s, 0, 1],
                                                dmats[kk, s, 1, 0], dmats[kk, s, 1, 1], s, stride)
    return out


@njit(cache=True)
def _k_weighted_z(weights, n):
    S = weights.shape[0]
    D = 1 << n
    out = np.zeros((S, D))
    for s in range(S):
        for k in range(D):
            acc = 0.0
            for q in range(n):
                if (k >> q) & 1:
                    acc -= weights[s, q]
                else:
                    acc += weights[s, q]
            out[s, k] = acc
    return out


def n_qubits_of(amps: np.ndarray) -> int:
    dim = amps.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ConfigError(f"amplitude length {dim} is not a power of two")
    return n


def zero_states(batch: int, n_qubits: int) -> np.ndarray:
    """``batch`` copies of |0...0> as an ``(batch, 2**n)`` complex array."""
    check_n_qubits(n_qubits)
    amps = np.zeros((batch, 1 << n_qubits), dtype=complex)
    amps[:, 0] = 1.0
    return amps


def check_n_qubits(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigError(f"n_qubits must be an integer in 1..{MAX_QUBITS}, got {n_qubits!r}")


def _check_index(q, n, what="qubit"):
    if not 0 <= q < n:
        raise ConfigError(f"{what} index {q} out of range for {n} qubit(s)")


def _stack(mat: np.ndarray, S: int) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim == 2:
        mat = np.broadcast_to(mat, (S, 2, 2))
    return np.ascontiguousarray(mat)


def apply_1q(amps: np.ndarray, mat: np.ndarray, target: int, out: np.ndarray | None = None) -> np.ndarray:
    """Apply a 2x2 matrix to ``target`` of every state in ``amps`` (shape (S, 2**n)).

    ``mat`` is either one (2, 2) matrix or a stack (S, 2, 2), one per state.
    Works in place unless ``out`` is given, in which case ``amps`` is untouched.
    """
    n = n_qubits_of(amps)
    _check_index(target, n)
    dst = amps if out is None else out
    _k_apply_1q(amps, dst, _stack(mat, amps.shape[0]), target)
    return dst


def apply_cnot(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    """Flip ``target`` on the basis states where ``control`` is 1, in place."""
    n = n_qubits_of(amps)
    _check_index(control, n, "control")
    _check_index(target, n, "target")
    if control == target:
        raise ConfigError("CNOT control and target must differ")
    _k_apply_cnot(amps, control, target)
    return amps


def sandwich(bra: np.ndarray, ket: np.ndarray, dmats: np.ndarray, target: int) -> np.ndarray:
    """``2 Re <bra|M_k|ket>`` for each matrix stack ``dmats[k]`` of shape (S, 2, 2)."""
    return _k_sandwich(bra, ket, np.ascontiguousarray(dmats), target)


def z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    """+1/-1 eigenvalues of Z on ``qubit`` for each basis index."""
    k = np.arange(1 << n_qubits)
    return 1.0 - 2.0 * ((k >> qubit) & 1)


def expectations_z(amps: np.ndarray) -> np.ndarray:
    """<Z_q> for every qubit of every state; returns shape (S, n)."""
    return _k_expectations_z(amps, n_qubits_of(amps))


def weighted_z_diagonal(weights: np.ndarray, n_qubits: int) -> np.ndarray:
    """Diagonal of sum_q weights[s, q] * Z_q for each state s; shape (S, 2**n)."""
    return _k_weighted_z(np.ascontiguousarray(weights, dtype=float), n_qubits)


# --- single-state interface --------------------------------------------------


class Statevector:
    """An n-qubit register holding ``2**n`` complex128 amplitudes."""

    def __init__(self, amplitudes, n_qubits: int | None = None):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = n_qubits_of(amps) if n_qubits is None else n_qubits
        check_n_qubits(n)
        if amps.shape[0] != 1 << n:
            raise ConfigError(f"expected {1 << n} amplitudes for {n} qubits, got {amps.shape[0]}")
        self.n_qubits = n
        self.amplitudes = amps

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits})"

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.n_qubits)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def new_zero_state(n_qubits: int) -> Statevector:
    check_n_qubits(n_qubits)
    return Statevector(zero_states(1, n_qubits)[0], n_qubits)


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Apply ``gate`` to ``state`` in place and return it."""
    for q in gate.qubits():
        _check_index(q, state.n_qubits)
    view = state.amplitudes[None, :]
    if gate.kind is GateKind.CNOT:
        apply_cnot(view, gate.control, gate.target)
    else:
        apply_1q(view, gate.matrix(), gate.target)
    return state


def run_gates(state: Statevector, gates) -> Statevector:
    for g in gates:
        apply_gate(state, g)
    return state


def expectation_z(state: Statevector, qubit: int) -> float:
    _check_index(qubit, state.n_qubits)
    probs = state.probabilities().reshape(-1, 2, 1 << qubit)
    return float(probs[:, 0, :].sum() - probs[:, 1, :].sum())


def expectation_z_all(state: Statevector) -> np.ndarray:
    return expectations_z(state.amplitudes[None, :])[0]
