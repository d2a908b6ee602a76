import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scrp.circuit import Circuit, CircuitError
from scrp.clifford import (
    CliffordTableau, clifford_group_order, clifford_unitary, cx_bound, decompose_clifford,
    sample_uniform_clifford, symplectic_group_order,
)
from scrp.paulis import pauli_matrix

seeds = st.integers(0, 2**32 - 1)


def test_group_orders():
    assert symplectic_group_order(1) == 6
    assert symplectic_group_order(2) == 720
    assert symplectic_group_order(3) == 1451520
    assert clifford_group_order(1) == 24
    assert clifford_group_order(2) == 11520
    assert clifford_group_order(3) == 92897280


def test_seed_determinism():
    assert sample_uniform_clifford(7) == sample_uniform_clifford(7)
    assert sample_uniform_clifford(7) != sample_uniform_clifford(8)


def test_identity_rarely_sampled():
    rng = np.random.default_rng(0)
    ident = CliffordTableau.identity()
    hits = sum(sample_uniform_clifford(rng) == ident for _ in range(10_000))
    # expected 10^4 / 92897280 ~ 1e-4
    assert hits == 0


def test_single_qubit_uniformity():
    rng = np.random.default_rng(3)
    counts = {}
    n = 24 * 200
    for _ in range(n):
        k = sample_uniform_clifford(rng, n=1).key()
        counts[k] = counts.get(k, 0) + 1
    assert len(counts) == 24
    chi2 = sum((c - n / 24) ** 2 / (n / 24) for c in counts.values())
    assert chi2 < 50  # 23 dof, p ~ 1e-3


@given(seeds)
def test_sample_is_symplectic_and_inverts(seed):
    t = sample_uniform_clifford(seed)
    assert t.is_symplectic()
    assert t.then(t.inverse()) == CliffordTableau.identity()
    assert t.inverse().then(t) == CliffordTableau.identity()


def test_identity_decomposes_to_empty():
    assert len(decompose_clifford(CliffordTableau.identity())) == 0


def test_single_cx_round_trip():
    t = CliffordTableau.from_circuit(Circuit(3).add("CX", 0, 2))
    c = decompose_clifford(t)
    assert CliffordTableau.from_circuit(c) == t
    assert c.count("CX") == 1


def test_two_hundred_decompositions():
    rng = np.random.default_rng(11)
    for _ in range(200):
        t = sample_uniform_clifford(rng)
        c = decompose_clifford(t)
        assert CliffordTableau.from_circuit(c) == t
        assert c.count("CX") <= cx_bound(3)
        assert set(c.counts()) <= {"RZ", "SX", "CX"}


@settings(max_examples=25)
@given(seeds)
def test_tableau_matches_unitary_conjugation(seed):
    t = sample_uniform_clifford(seed)
    u = clifford_unitary(t)
    n = 3
    for row in range(2 * n):
        label = "".join("Y" if t.x[row, q] and t.z[row, q] else "X" if t.x[row, q] else "Z" if t.z[row, q] else "I" for q in range(n))
        sign = -1 if t.r[row] else 1
        gen = ["I"] * n
        gen[row % n] = "X" if row < n else "Z"
        img = u @ pauli_matrix("".join(gen)) @ u.conj().T
        np.testing.assert_allclose(img, sign * pauli_matrix(label), atol=1e-10)


def test_non_clifford_angle_rejected():
    with pytest.raises(CircuitError):
        CliffordTableau.from_circuit(Circuit(1).add("RZ", 0, params=(0.3,)))
