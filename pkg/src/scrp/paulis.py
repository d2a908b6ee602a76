"""Pauli strings, decompositions and small unitary helpers."""
from __future__ import annotations

import itertools
from functools import lru_cache, reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli_labels(n: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n)]


@lru_cache(maxsize=None)
def _pauli_matrix_cached(label: str) -> np.ndarray:
    m = reduce(np.kron, [PAULI[c] for c in label])
    m.setflags(write=False)
    return m


def pauli_matrix(label: str) -> np.ndarray:
    return _pauli_matrix_cached(label)


@lru_cache(maxsize=None)
def pauli_basis(n: int) -> np.ndarray:
    """Array of shape (4^n, 2^n, 2^n) in ``pauli_labels`` order."""
    b = np.array([pauli_matrix(lab) for lab in pauli_labels(n)])
    b.setflags(write=False)
    return b


def pauli_coefficients(op: np.ndarray) -> dict[str, complex]:
    """coeff(P) = Tr(P op) / 2^n for every Pauli string (no Hermiticity check)."""
    d = op.shape[0]
    n = int(round(np.log2(d)))
    vals = np.einsum("kij,ji->k", pauli_basis(n), op) / d
    return dict(zip(pauli_labels(n), vals))


def pauli_decompose(h: np.ndarray, atol: float = 1e-10) -> dict[str, float]:
    """Real Pauli coefficients of a Hermitian operator."""
    h = np.asarray(h, dtype=complex)
    scale = max(np.linalg.norm(h), 1.0)
    if np.linalg.norm(h - h.conj().T) > atol * scale:
        raise ValueError("operator is not Hermitian")
    return {k: float(v.real) for k, v in pauli_coefficients(h).items()}


def pauli_synthesize(coeffs: dict[str, complex]) -> np.ndarray:
    labels = list(coeffs)
    n = len(labels[0])
    out = np.zeros((2**n, 2**n), dtype=complex)
    for lab, c in coeffs.items():
        out += c * pauli_matrix(lab)
    return out


def rotation(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle P / 2) for P in {X, Y, Z}."""
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * PAULI[axis]


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary (polar factor) to ``m``."""
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def operator_distance_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    """min over phases of the spectral norm of a - e^{i phi} b."""
    tr = np.trace(b.conj().T @ a)
    phase = tr / abs(tr) if abs(tr) > 1e-15 else 1.0
    return float(np.linalg.norm(a - phase * b, 2))
