import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from scrp.paulis import (
    operator_distance_up_to_phase, pauli_decompose, pauli_labels, pauli_matrix, pauli_synthesize,
    polar_unitary, random_unitary, rotation,
)


def test_single_label():
    coeffs = pauli_decompose(pauli_matrix("ZXI"))
    assert coeffs["ZXI"] == pytest.approx(1.0)
    assert sum(abs(v) for k, v in coeffs.items() if k != "ZXI") < 1e-15


def test_zero_operator():
    assert all(v == 0 for v in pauli_decompose(np.zeros((8, 8))).values())


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        pauli_decompose(np.array([[0, 1], [0, 0]], dtype=complex))


def _hermitian(raw):
    n = 8
    m = raw[: n * n].reshape(n, n) + 1j * raw[n * n:].reshape(n, n)
    return m + m.conj().T


@given(arrays(np.float64, 128, elements=st.floats(-1e3, 1e3)))
def test_resynthesis_and_completeness(raw):
    h = _hermitian(raw)
    coeffs = pauli_decompose(h)
    assert np.linalg.norm(pauli_synthesize(coeffs) - h) <= 1e-12 * max(np.linalg.norm(h), 1.0)
    assert 8 * sum(c * c for c in coeffs.values()) == pytest.approx(np.linalg.norm(h) ** 2, rel=1e-10, abs=1e-9)


def test_labels_order():
    assert pauli_labels(1) == ["I", "X", "Y", "Z"]
    assert len(pauli_labels(3)) == 64


def test_rotation_half_angle():
    np.testing.assert_allclose(rotation("X", np.pi), -1j * pauli_matrix("X"), atol=1e-15)


def test_polar_and_phase_distance(rng):
    u = random_unitary(4, rng)
    np.testing.assert_allclose(polar_unitary(1.0001 * u), u, atol=1e-12)
    assert operator_distance_up_to_phase(np.exp(0.7j) * u, u) < 1e-12
