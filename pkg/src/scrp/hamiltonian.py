"""Dense Duffing-oscillator Hamiltonians over the truncated Fock space.

Tensor ordering follows the transmon order of the device; for a parity
triplet that order is (c1, t, c2).  Transmon 0 is the most significant factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .device_model import DeviceConfig

MAX_DIMENSION = 3**7


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DriveSpec:
    target_transmon: int
    amplitude: complex
    carrier: float


def lowering(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1)


def embed(op: np.ndarray, index: int, dims: Sequence[int]) -> np.ndarray:
    mats = [op if k == index else np.eye(d) for k, d in enumerate(dims)]
    return reduce(np.kron, mats)


def _check_dims(dims: Sequence[int]) -> None:
    if int(np.prod(dims)) > MAX_DIMENSION:
        raise DimensionError(f"Hilbert space dimension {int(np.prod(dims))} exceeds cap {MAX_DIMENSION}")


def lowering_operators(device: DeviceConfig) -> np.ndarray:
    """Stack of embedded lowering operators, shape (n, D, D), real."""
    dims = device.dims
    _check_dims(dims)
    return np.array([embed(lowering(d), k, dims) for k, d in enumerate(dims)])


def _diagonal_part(device: DeviceConfig, frame: float) -> np.ndarray:
    dims = device.dims
    diag = np.zeros(int(np.prod(dims)))
    for k, tr in enumerate(device.transmons):
        n = np.arange(tr.levels, dtype=float)
        local = (tr.frequency - frame) * n + 0.5 * tr.anharmonicity * n * (n - 1)
        diag += embed(np.diag(local), k, dims).diagonal()
    return diag


def _exchange_part(device: DeviceConfig, ops: np.ndarray) -> np.ndarray:
    h = np.zeros(ops.shape[1:])
    for c in device.couplings:
        a, b = c.pair
        hop = ops[a].T @ ops[b]
        h += c.strength * (hop + hop.T)
    return h


def build_static_hamiltonian(device: DeviceConfig) -> np.ndarray:
    """Lab-frame static Hamiltonian (RWA exchange), rad/s."""
    ops = lowering_operators(device)
    return np.diag(_diagonal_part(device, 0.0)) + _exchange_part(device, ops)


def build_rotating_frame_hamiltonian(device: DeviceConfig, drives: Sequence[DriveSpec] = (), carrier: float | None = None) -> np.ndarray:
    """Hamiltonian in the frame rotating at the common drive carrier."""
    carriers = {d.carrier for d in drives}
    if carrier is not None:
        carriers.add(carrier)
    if len(carriers) > 1:
        raise ValueError(f"all drives must share one carrier, got {sorted(carriers)}")
    if not carriers:
        raise ValueError("a carrier frequency is required")
    wd = carriers.pop()
    if not wd > 0:
        raise ValueError("carrier must be positive")
    ops = lowering_operators(device)
    h = np.diag(_diagonal_part(device, wd)) + _exchange_part(device, ops)
    h = h.astype(complex)
    for d in drives:
        a = ops[d.target_transmon]
        h += 0.5 * (np.conj(d.amplitude) * a + d.amplitude * a.T)
    return h


def computational_indices(dims: Sequence[int]) -> np.ndarray:
    """Fock-space indices of the 2^n states with every transmon in {0, 1}."""
    n = len(dims)
    strides = [int(np.prod(dims[k + 1:])) for k in range(n)]
    out = []
    for bits in range(2**n):
        idx = 0
        for k in range(n):
            if (bits >> (n - 1 - k)) & 1:
                idx += strides[k]
        out.append(idx)
    return np.array(out)


def dressed_basis(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors of ``h`` assigned to bare states by maximum overlap.

    Returns ``(energies, vectors)`` with ``vectors[:, k]`` the eigenstate
    continuously connected to bare state ``k``; phases fixed so that the
    diagonal overlap is real positive.
    """
    evals, evecs = np.linalg.eigh(h)
    dim = h.shape[0]
    overlap = np.abs(evecs) ** 2
    order = np.empty(dim, dtype=int)
    taken = np.zeros(dim, dtype=bool)
    # Assign the most bare-like eigenstates first.
    for col in np.argsort(-overlap.max(axis=0)):
        rows = np.argsort(-overlap[:, col])
        for r in rows:
            if not taken[r]:
                order[r] = col
                taken[r] = True
                break
    vecs = evecs[:, order]
    phase = np.diagonal(vecs).copy()
    phase = phase / np.abs(phase)
    return evals[order], vecs / phase


def static_dressed_frame(device: DeviceConfig, carrier: float) -> tuple[np.ndarray, np.ndarray]:
    """Dressed energies/vectors of the undriven rotating-frame Hamiltonian."""
    h = build_rotating_frame_hamiltonian(device, carrier=carrier)
    return dressed_basis(h.real)


def dressed_frequency(device: DeviceConfig, index: int) -> float:
    """0->1 transition frequency of transmon ``index`` with all others in 0 (rad/s)."""
    energies, _ = dressed_basis(build_static_hamiltonian(device))
    dims = device.dims
    stride = int(np.prod(dims[index + 1:]))
    return float(energies[stride] - energies[0])


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Unitary reordering tensor factors: new factor k is old factor perm[k]."""
    dims = list(dims)
    dim = int(np.prod(dims))
    eye = np.eye(dim).reshape(dims + [dim])
    return eye.transpose(list(perm) + [len(dims)]).reshape(dim, dim)
