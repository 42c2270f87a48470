import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from qcredit import qsim
from qcredit.errors import ConfigError
from qcredit.qsim import GateKind, GateOp

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def random_gates(rng, n, count):
    gates = []
    for _ in range(count):
        kind = rng.choice(["RX", "RY", "RZ", "ROT"] + (["CNOT"] if n > 1 else []))
        t = int(rng.integers(n))
        if kind == "CNOT":
            c = int(rng.choice([q for q in range(n) if q != t]))
            gates.append(GateOp(kind, t, control=c))
        else:
            k = 3 if kind == "ROT" else 1
            gates.append(GateOp(kind, t, angles=tuple(rng.uniform(-np.pi, np.pi, k))))
    return gates


def dense(gate, n):
    if gate.kind is GateKind.CNOT:
        return oracle.cnot(gate.control, gate.target, n)
    a = gate.angles
    u = {"RX": oracle.rx, "RY": oracle.ry, "RZ": oracle.rz}.get(gate.kind.value)
    m = oracle.rot(*a) if gate.kind is GateKind.ROT else u(a[0])
    return oracle.single(m, gate.target, n)


def test_zero_state():
    s = qsim.new_zero_state(3)
    assert s.amplitudes[0] == 1 and np.count_nonzero(s.amplitudes) == 1


def test_x_on_qubit0_sets_index1():
    s = qsim.apply_gate(qsim.new_zero_state(2), GateOp("RX", 0, angles=(np.pi,)))
    assert abs(abs(s.amplitudes[1]) - 1) < 1e-15


def test_rx_pi_on_qubit1_sets_index2():
    s = qsim.apply_gate(qsim.new_zero_state(2), GateOp("RX", 1, angles=(np.pi,)))
    assert np.allclose(np.abs(s.amplitudes), [0, 0, 1, 0])


def test_bell_state():
    s = qsim.new_zero_state(2)
    qsim.apply_gate(s, GateOp("RY", 0, angles=(np.pi / 2,)))
    qsim.apply_gate(s, GateOp("CNOT", 1, control=0))
    assert np.allclose(s.probabilities(), [0.5, 0, 0, 0.5])


@given(angles)
def test_rx_expectation_is_cos(theta):
    s = qsim.apply_gate(qsim.new_zero_state(1), GateOp("RX", 0, angles=(theta,)))
    assert abs(qsim.expectation_z(s, 0) - np.cos(theta)) < 1e-12


@given(angles, angles, angles)
def test_rot_matches_expm_product(phi, theta, omega):
    assert np.allclose(qsim.rot_matrix(phi, theta, omega), oracle.rot(phi, theta, omega), atol=1e-13)


@given(angles)
def test_single_axis_matrices(t):
    assert np.allclose(qsim.rx_matrix(t), oracle.rx(t), atol=1e-13)
    assert np.allclose(qsim.ry_matrix(t), oracle.ry(t), atol=1e-13)
    assert np.allclose(qsim.rz_matrix(t), oracle.rz(t), atol=1e-13)


@given(angles, angles, angles)
def test_rot_derivatives_match_finite_differences(phi, theta, omega):
    d = qsim.rot_derivatives(phi, theta, omega)
    h = 1e-6
    base = np.array([phi, theta, omega])
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (qsim.rot_matrix(*(base + e)) - qsim.rot_matrix(*(base - e))) / (2 * h)
        assert np.allclose(d[k], fd, atol=1e-8)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_random_circuit_matches_kronecker_oracle(n, seed):
    rng = np.random.default_rng(seed)
    gates = random_gates(rng, n, 20)
    s = qsim.run_gates(qsim.new_zero_state(n), gates)
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    for g in gates:
        psi = dense(g, n) @ psi
    assert np.max(np.abs(s.amplitudes - psi)) < 1e-12


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_norm_preserved(n, seed):
    rng = np.random.default_rng(seed)
    s = qsim.run_gates(qsim.new_zero_state(n), random_gates(rng, n, 40))
    assert abs(s.norm_squared() - 1) < 1e-12


def test_batched_kernel_uses_per_sample_matrices(rng):
    n, S = 3, 5
    thetas = rng.uniform(-3, 3, S)
    amps = qsim.zero_states(S, n)
    qsim.apply_1q(amps, qsim.ry_matrix(thetas), 1)
    for s in range(S):
        ref = oracle.single(oracle.ry(thetas[s]), 1, n)[:, 0]
        assert np.allclose(amps[s], ref, atol=1e-14)


def test_apply_1q_out_leaves_source(rng):
    amps = qsim.zero_states(2, 2)
    out = np.empty_like(amps)
    qsim.apply_1q(amps, qsim.rx_matrix(0.3), 0, out=out)
    assert np.array_equal(amps, qsim.zero_states(2, 2))
    assert not np.allclose(out, amps)


def test_expectations_match_oracle(rng):
    n = 4
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    got = qsim.expectations_z(psi[None, :])[0]
    assert np.allclose(got, oracle.z_expectations(psi, n), atol=1e-14)
    st_ = qsim.Statevector(psi.copy())
    assert abs(qsim.expectation_z(st_, 2) - got[2]) < 1e-14


def test_sandwich_matches_dense(rng):
    n, S = 3, 2
    bra = rng.standard_normal((S, 8)) + 1j * rng.standard_normal((S, 8))
    ket = rng.standard_normal((S, 8)) + 1j * rng.standard_normal((S, 8))
    d = rng.standard_normal((2, S, 2, 2)) + 1j * rng.standard_normal((2, S, 2, 2))
    got = qsim.sandwich(bra, ket, d, 1)
    for s in range(S):
        for k in range(2):
            ref = 2 * np.real(np.vdot(bra[s], oracle.single(d[k, s], 1, n) @ ket[s]))
            assert abs(got[s, k] - ref) < 1e-12


def test_gate_validation():
    with pytest.raises(ConfigError):
        GateOp("CNOT", 0, control=0)
    with pytest.raises(ConfigError):
        GateOp("RX", 0, angles=(1.0, 2.0))
    with pytest.raises(ConfigError, match="NaN"):
        GateOp("RY", 0, angles=(float("nan"),))
    with pytest.raises(ConfigError):
        GateOp("RZ", 0, control=1, angles=(0.1,))


def test_out_of_range_qubit():
    with pytest.raises(ConfigError, match="out of range"):
        qsim.apply_gate(qsim.new_zero_state(2), GateOp("RX", 2, angles=(0.1,)))


@pytest.mark.parametrize("n", [0, qsim.MAX_QUBITS + 1])
def test_register_size_limits(n):
    with pytest.raises(ConfigError):
        qsim.new_zero_state(n)


def test_bad_amplitude_length():
    with pytest.raises(ConfigError):
        qsim.Statevector(np.ones(3))
