"""A small gate-level circuit IR with dense statevector / density-matrix application.

Qubit 0 is the most significant bit of a basis index, matching the pulse
modules.  ZPARITY acts on (c1, t, c2) and is defined as CX(c1, t) CX(c2, t).
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .paulis import rotation

SINGLE_QUBIT = {"RZ", "RX", "SX", "SXDG", "X", "Y", "Z", "H", "S", "SDG", "I"}
TWO_QUBIT = {"CX", "SWAP"}
THREE_QUBIT = {"ZPARITY"}
DIRECTIVES = {"DELAY", "BARRIER", "MEASURE"}
GATE_NAMES = SINGLE_QUBIT | TWO_QUBIT | THREE_QUBIT | DIRECTIVES
PARAMETRIC = {"RZ", "RX", "DELAY"}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        name = self.name
        if name not in GATE_NAMES:
            raise CircuitError(f"unknown gate {name}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{name} has repeated qubits")
        want = 1 if name in SINGLE_QUBIT else 2 if name in TWO_QUBIT else 3 if name in THREE_QUBIT else None
        if want is not None and len(self.qubits) != want:
            raise CircuitError(f"{name} acts on {want} qubits, got {len(self.qubits)}")
        if name in PARAMETRIC and len(self.params) != 1:
            raise CircuitError(f"{name} needs one parameter")
        if name == "DELAY" and self.params[0] < 0:
            raise CircuitError("delay must be non-negative")

    @property
    def is_unitary(self) -> bool:
        return self.name not in DIRECTIVES

    def to_dict(self) -> dict:
        d = {"name": self.name, "qubits": list(self.qubits)}
        if self.params:
            d["params"] = list(self.params)
        return d


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if any(not 0 <= q < self.n_qubits for q in g.qubits):
            raise CircuitError(f"gate {g.name} on out-of-range qubit {g.qubits}")

    def add(self, name: str, *qubits: int, params: tuple = ()) -> "Circuit":
        g = Gate(name, qubits, params)
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self._check(g)
            self.gates.append(g)
        return self

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.gates))

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def counts(self) -> dict[str, int]:
        return dict(Counter(g.name for g in self.gates))

    def count(self, name: str) -> int:
        return sum(g.name == name for g in self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [inverse_gate(g) for g in reversed(self.gates) if g.name != "MEASURE"])

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "gates": [g.to_dict() for g in self.gates]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        try:
            gates = [Gate(g["name"], g["qubits"], g.get("params", ())) for g in data["gates"]]
            return cls(int(data["n_qubits"]), gates)
        except (KeyError, TypeError) as exc:
            raise CircuitError(f"malformed circuit document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise CircuitError(f"circuit JSON parse error: {exc}") from exc


_SELF_INVERSE = {"X", "Y", "Z", "H", "CX", "SWAP", "ZPARITY", "I"}
_INVERSE_NAME = {"S": "SDG", "SDG": "S", "SX": "SXDG", "SXDG": "SX"}


def inverse_gate(g: Gate) -> Gate:
    if g.name in _SELF_INVERSE or g.name in ("DELAY", "BARRIER"):
        return g
    if g.name in _INVERSE_NAME:
        return Gate(_INVERSE_NAME[g.name], g.qubits)
    if g.name in ("RZ", "RX"):
        return Gate(g.name, g.qubits, (-g.params[0],))
    raise CircuitError(f"no inverse for {g.name}")


# --------------------------------------------------------------------------
# Unitaries
# --------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_FIXED = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _H,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "SX": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    "SXDG": 0.5 * np.array([[1 - 1j, 1 + 1j], [1 + 1j, 1 - 1j]]),
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


@lru_cache(maxsize=None)
def _zparity() -> np.ndarray:
    u = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        c1, t, c2 = (i >> 2) & 1, (i >> 1) & 1, i & 1
        j = (c1 << 2) | ((t ^ c1 ^ c2) << 1) | c2
        u[j, i] = 1
    return u


def gate_unitary(g: Gate) -> np.ndarray:
    """Matrix of ``g`` on its own qubits (in the listed order)."""
    if g.name in _FIXED:
        return _FIXED[g.name]
    if g.name == "RZ":
        return rotation("Z", g.params[0])
    if g.name == "RX":
        return rotation("X", g.params[0])
    if g.name == "ZPARITY":
        return _zparity()
    raise CircuitError(f"{g.name} has no unitary")


def apply_unitary(state: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Apply ``u`` on ``qubits`` to the leading n-qubit index of ``state`` (shape (2^n, ...))."""
    k = len(qubits)
    rest = state.shape[1:]
    t = state.reshape((2,) * n + rest)
    t = np.moveaxis(t, qubits, range(k))
    t = np.tensordot(u.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), list(range(k))))
    t = np.moveaxis(t, range(k), qubits)
    return t.reshape(state.shape)


def apply_gate(state: np.ndarray, g: Gate, n: int) -> np.ndarray:
    if not g.is_unitary:
        return state
    return apply_unitary(state, gate_unitary(g), g.qubits, n)


def apply_to_density(rho: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """rho -> U rho U^dag with U acting on ``qubits``."""
    rho = apply_unitary(rho, u, qubits, n)
    return apply_unitary(rho.conj().T, u, qubits, n).conj().T


MAX_DENSE_QUBITS = 12


def circuit_unitary(c: Circuit) -> np.ndarray:
    if c.n_qubits > MAX_DENSE_QUBITS:
        raise CircuitError(f"dense unitary limited to {MAX_DENSE_QUBITS} qubits")
    u = np.eye(2**c.n_qubits, dtype=complex)
    for g in c.gates:
        u = apply_gate(u, g, c.n_qubits)
    return u


def run_statevector(c: Circuit, psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    for g in c.gates:
        psi = apply_gate(psi, g, c.n_qubits)
    return psi


def basis_state(bits: str) -> np.ndarray:
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int(bits, 2)] = 1.0
    return psi
