import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlp import DomainError
from qlp.statevector import (
    Gate,
    StateVector,
    apply_controlled_swap,
    apply_gate,
    gate_matrix,
    is_unitary,
    new_basis_state,
    overlap,
    qubit_probability,
    sample_counts,
    tensor,
)

R2 = 1 / math.sqrt(2)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def test_basis_states():
    assert np.array_equal(new_basis_state(1, 0).amplitudes, [1, 0])
    assert np.array_equal(new_basis_state(2, 3).amplitudes, [0, 0, 0, 1])
    with pytest.raises(DomainError, match="out of range"):
        new_basis_state(2, 4)
    with pytest.raises(DomainError):
        new_basis_state(0, 0)
    with pytest.raises(DomainError):
        new_basis_state(25, 0)


def test_single_qubit_gates():
    zero = new_basis_state(1, 0)
    np.testing.assert_allclose(apply_gate(zero, Gate.h(0)).amplitudes, [R2, R2], atol=1e-15)
    np.testing.assert_allclose(apply_gate(zero, Gate.x(0)).amplitudes, [0, 1])
    plus = StateVector([R2, R2])
    np.testing.assert_allclose(apply_gate(plus, Gate.z(0)).amplitudes, [R2, -R2])


def test_apply_gate_does_not_mutate_input():
    zero = new_basis_state(1, 0)
    apply_gate(zero, Gate.x(0))
    assert zero.amplitudes[0] == 1


def test_little_endian_ordering():
    # X on qubit 1 of |00> sets bit 1 -> index 2
    s = apply_gate(new_basis_state(2, 0), Gate.x(1))
    assert s.amplitudes[2] == 1


def test_gate_index_errors():
    s = new_basis_state(2, 0)
    with pytest.raises(DomainError, match="out of range"):
        apply_gate(s, Gate.h(2))
    with pytest.raises(DomainError, match="distinct"):
        Gate.swap(1, 1)
    with pytest.raises(DomainError, match="distinct"):
        Gate.cswap(0, 1, 0)


def test_cswap_cases():
    # qubit 0 = control, qubits 1,2 = registers; |c=1, q1=1, q2=0> is index 0b011
    s = apply_controlled_swap(new_basis_state(3, 0b011), 0, 1, 2)
    assert s.amplitudes[0b101] == 1
    # control |0> leaves every register state alone
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = random_state(rng, 3).amplitudes.copy()
        v[1::2] = 0
        v /= np.linalg.norm(v)
        out = apply_controlled_swap(StateVector(v), 0, 1, 2)
        np.testing.assert_allclose(out.amplitudes, v)
    # control in superposition
    s = new_basis_state(3, 0b010).apply(Gate.h(0))
    out = apply_controlled_swap(s, 0, 1, 2)
    expected = np.zeros(8)
    expected[0b010] = R2
    expected[0b101] = R2
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)


def test_cswap_control_above_targets():
    s = new_basis_state(3, 0b101)  # control qubit 2 set, qubit 0 set
    out = apply_controlled_swap(s, 2, 0, 1)
    assert out.amplitudes[0b110] == 1


def test_swap_and_cz():
    s = apply_gate(new_basis_state(3, 0b001), Gate.swap(0, 2))
    assert s.amplitudes[0b100] == 1
    v = np.full(4, 0.5, dtype=complex)
    out = apply_gate(StateVector(v), Gate.cz(0, 1))
    np.testing.assert_allclose(out.amplitudes, [0.5, 0.5, 0.5, -0.5])


def test_phase_flip_on_set():
    v = np.full(4, 0.5)
    out = apply_gate(StateVector(v), Gate.phase_flip({2}))
    np.testing.assert_allclose(out.amplitudes, [0.5, 0.5, -0.5, 0.5])


@pytest.mark.parametrize(
    "gate",
    [Gate.h(1), Gate.x(0), Gate.z(2), Gate.ry(1, 0.7), Gate.cz(0, 2), Gate.swap(1, 2),
     Gate.cswap(2, 0, 1), Gate.phase_flip({1, 5, 6})],
    ids=lambda g: g.kind,
)
def test_every_gate_kind_is_unitary(gate):
    assert is_unitary(gate_matrix(gate, 3), atol=1e-12)


def test_qubit_probability():
    assert qubit_probability(new_basis_state(1, 0), 0, 0) == 1.0
    plus = apply_gate(new_basis_state(1, 0), Gate.h(0))
    assert qubit_probability(plus, 0, 1) == pytest.approx(0.5, abs=1e-12)
    rng = np.random.default_rng(0)
    s = random_state(rng, 4)
    for q in range(4):
        assert qubit_probability(s, q, 0) + qubit_probability(s, q, 1) == pytest.approx(1, abs=1e-12)
    with pytest.raises(DomainError):
        qubit_probability(s, 4, 0)


def test_sample_counts_deterministic_state():
    counts = sample_counts(new_basis_state(1, 1), 100, seed=12345)
    assert counts.histogram == {1: 100}


def test_sample_counts_binomial_bound():
    plus = apply_gate(new_basis_state(1, 0), Gate.h(0))
    shots = 10**5
    p0 = qubit_probability(plus, 0, 0)
    counts = sample_counts(plus, shots, seed=7)
    sigma = math.sqrt(shots * p0 * (1 - p0))
    assert abs(counts.histogram[0] - shots * p0) < 4 * sigma
    assert sum(counts.histogram.values()) == shots


def test_sample_counts_replay():
    s = random_state(np.random.default_rng(1), 5)
    a = sample_counts(s, 1000, seed=99)
    b = sample_counts(s, 1000, seed=99)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(DomainError):
        sample_counts(s, 0, seed=1)


def test_overlap():
    rng = np.random.default_rng(2)
    s = random_state(rng, 3)
    assert overlap(s, s) == pytest.approx(1 + 0j, abs=1e-12)
    assert overlap(new_basis_state(1, 0), new_basis_state(1, 1)) == 0
    plus = apply_gate(new_basis_state(1, 0), Gate.h(0))
    # <0|+> = 1/sqrt(2) by direct dot product
    assert overlap(new_basis_state(1, 0), plus) == pytest.approx(R2, abs=1e-15)
    with pytest.raises(DomainError):
        overlap(new_basis_state(1, 0), new_basis_state(2, 0))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_overlap_symmetric_modulus(n, seed):
    rng = np.random.default_rng(seed)
    a, b = random_state(rng, n), random_state(rng, n)
    assert abs(overlap(a, b)) ** 2 == pytest.approx(abs(overlap(b, a)) ** 2, abs=1e-12)
    assert abs(overlap(a, b)) <= 1 + 1e-9


def test_tensor_ordering():
    one = new_basis_state(1, 1)
    zero = new_basis_state(1, 0)
    # first factor sits on qubit 0
    assert tensor(one, zero).amplitudes[1] == 1


def test_json_roundtrip():
    s = random_state(np.random.default_rng(4), 2)
    back = StateVector.from_json(s.to_json())
    np.testing.assert_array_equal(back.amplitudes, s.amplitudes)


def test_rejects_unnormalized():
    with pytest.raises(DomainError, match="norm"):
        StateVector([1.0, 1.0])
