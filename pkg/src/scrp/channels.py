"""Pauli transfer matrices, coherence-limited fidelity and small channel helpers."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .paulis import pauli_basis


def unitary_ptm(u: np.ndarray) -> np.ndarray:
    """PTM R_ij = Tr(P_i U P_j U^dag) / d in the normalized Pauli basis (real)."""
    d = u.shape[0]
    n = int(round(np.log2(d)))
    basis = pauli_basis(n)
    images = u @ basis @ u.conj().T
    return np.einsum("iab,jba->ij", basis, images).real / d


def kraus_ptm(kraus: Sequence[np.ndarray]) -> np.ndarray:
    d = kraus[0].shape[0]
    n = int(round(np.log2(d)))
    basis = pauli_basis(n)
    images = sum(k @ basis @ k.conj().T for k in kraus)
    return np.einsum("iab,jba->ij", basis, images).real / d


def damping_kraus(t: float, t1: float, t2: float) -> list[np.ndarray]:
    """Kraus operators of amplitude damping plus pure dephasing for idle time ``t``."""
    if not 0 < t2 <= 2 * t1:
        raise ValueError("need 0 < t2 <= 2 t1")
    gamma = 1.0 - np.exp(-t / t1)
    coherence = np.exp(-t / t2)
    # Amplitude damping alone leaves sqrt(1 - gamma) coherence; dephase the rest.
    lam = coherence / np.sqrt(1.0 - gamma) if gamma < 1 else 0.0
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    p = 0.5 * (1 + lam)
    z = np.diag([1.0, -1.0]).astype(complex)
    return [np.sqrt(p) * k0, np.sqrt(p) * k1, np.sqrt(1 - p) * z @ k0, np.sqrt(1 - p) * z @ k1]


def damping_ptm(t: float, t1: float, t2: float) -> np.ndarray:
    """Single-qubit PTM: diag(1, e^{-t/T2}, e^{-t/T2}, e^{-t/T1}) plus the T1 feed into I->Z."""
    gamma = 1.0 - np.exp(-t / t1)
    coherence = np.exp(-t / t2)
    r = np.diag([1.0, coherence, coherence, 1.0 - gamma])
    r[3, 0] = gamma
    return r


def depolarizing_ptm(p: float, n: int) -> np.ndarray:
    """rho -> (1-p) rho + p I/d."""
    r = np.eye(4**n) * (1.0 - p)
    r[0, 0] = 1.0
    return r


def average_gate_fidelity(ptm: np.ndarray, target: np.ndarray | None = None) -> float:
    """F_avg = (Tr(R_target^T R) + d) / (d (d + 1)) with d = 2^n."""
    d = int(round(np.sqrt(ptm.shape[0])))
    r = ptm if target is None else target.T @ ptm
    return float((np.trace(r) + d) / (d * (d + 1)))


def coherence_limit(duration: float, t1s: Sequence[float], t2s: Sequence[float]) -> float:
    """Average gate error from independent T1/T2 damping on each qubit.

    e = d/(d+1) * (1 - prod_q Tr(S_q)/4), with S_q the single-qubit damping PTM.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if len(t1s) != len(t2s):
        raise ValueError("t1s and t2s must have equal length")
    d = 2 ** len(t1s)
    prod = 1.0
    for t1, t2 in zip(t1s, t2s):
        if not (t1 > 0 and 0 < t2 <= 2 * t1):
            raise ValueError("need t1 > 0 and 0 < t2 <= 2 t1")
        prod *= np.trace(damping_ptm(duration, t1, t2)) / 4.0
    return float(d / (d + 1) * (1.0 - prod))


def apply_kraus(rho: np.ndarray, kraus: Sequence[np.ndarray]) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)
