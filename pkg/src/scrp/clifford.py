"""Stabilizer tableaux for n-qubit Cliffords: sampling, simulation and synthesis.

A tableau stores, for each generator X_0..X_{n-1}, Z_0..Z_{n-1}, its image
under the Clifford as a signed Pauli (x bits, z bits, sign bit), with x = z = 1
meaning Y.  Gate updates follow the Aaronson-Gottesman rules.
"""
from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit, Gate, CircuitError

N_QUBITS = 3


def symplectic_group_order(n: int) -> int:
    out = 1
    for j in range(1, n + 1):
        out *= (4**j - 1) * 4**j // 2
    return out


def clifford_group_order(n: int) -> int:
    """|C_n / U(1)| = |Sp(2n, 2)| * 4^n."""
    return symplectic_group_order(n) * 4**n


class CliffordTableau:
    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.x = np.asarray(x, dtype=np.uint8) & 1
        self.z = np.asarray(z, dtype=np.uint8) & 1
        self.r = np.asarray(r, dtype=np.uint8) & 1

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @classmethod
    def identity(cls, n: int = N_QUBITS) -> "CliffordTableau":
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        return cls(np.vstack([eye, zero]), np.vstack([zero, eye]), np.zeros(2 * n, dtype=np.uint8))

    @classmethod
    def from_circuit(cls, c: Circuit) -> "CliffordTableau":
        t = cls.identity(c.n_qubits)
        for g in c.gates:
            t.apply(g)
        return t

    def copy(self) -> "CliffordTableau":
        return CliffordTableau(self.x.copy(), self.z.copy(), self.r.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CliffordTableau)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    def __repr__(self) -> str:
        return f"CliffordTableau(n={self.n}, key={self.key()})"

    def key(self) -> bytes:
        return np.concatenate([self.x.ravel(), self.z.ravel(), self.r]).tobytes()

    def symplectic_matrix(self) -> np.ndarray:
        return np.hstack([self.x, self.z])

    def is_symplectic(self) -> bool:
        m = self.symplectic_matrix().astype(int)
        n = self.n
        omega = np.block([[np.zeros((n, n), int), np.eye(n, dtype=int)], [np.eye(n, dtype=int), np.zeros((n, n), int)]])
        return np.array_equal((m @ omega @ m.T) % 2, omega)

    # -- elementary conjugations ------------------------------------------------

    def _h(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def _s(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def _cx(self, a, b):
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def apply(self, g: Gate) -> "CliffordTableau":
        """Conjugate by gate ``g`` applied after the current Clifford (in place)."""
        name, q = g.name, g.qubits
        if name in ("BARRIER", "DELAY", "I", "MEASURE"):
            return self
        if name == "H":
            self._h(q[0])
        elif name == "S":
            self._s(q[0])
        elif name == "SDG":
            for _ in range(3):
                self._s(q[0])
        elif name == "X":
            self.r ^= self.z[:, q[0]]
        elif name == "Z":
            self.r ^= self.x[:, q[0]]
        elif name == "Y":
            self.r ^= self.x[:, q[0]] ^ self.z[:, q[0]]
        elif name == "SX":
            self._h(q[0])
            self._s(q[0])
            self._h(q[0])
        elif name == "SXDG":
            self._h(q[0])
            for _ in range(3):
                self._s(q[0])
            self._h(q[0])
        elif name in ("RZ", "RX"):
            k = self._quarter_turns(g.params[0])
            if name == "RX":
                self._h(q[0])
            for _ in range(k):
                self._s(q[0])
            if name == "RX":
                self._h(q[0])
        elif name == "CX":
            self._cx(q[0], q[1])
        elif name == "SWAP":
            self._cx(q[0], q[1])
            self._cx(q[1], q[0])
            self._cx(q[0], q[1])
        elif name == "ZPARITY":
            self._cx(q[0], q[1])
            self._cx(q[2], q[1])
        else:  # pragma: no cover - guarded by Gate validation
            raise CircuitError(f"{name} is not a Clifford gate")
        return self

    @staticmethod
    def _quarter_turns(angle: float) -> int:
        k = angle / (math.pi / 2)
        if abs(k - round(k)) > 1e-9:
            raise CircuitError(f"rotation {angle} is not a Clifford angle")
        return int(round(k)) % 4

    # -- group operations ---------------------------------------------------

    def then(self, other: "CliffordTableau") -> "CliffordTableau":
        """The Clifford 'self followed by other'."""
        out = self.copy()
        for g in decompose_clifford(other).gates:
            out.apply(g)
        return out

    def inverse(self) -> "CliffordTableau":
        return CliffordTableau.from_circuit(decompose_clifford(self).inverse())


def _omega(u: np.ndarray, v: np.ndarray, n: int) -> int:
    return int((u[:n] @ v[n:] + u[n:] @ v[:n]) % 2)


def sample_uniform_clifford(rng: np.random.Generator | int | None = None, n: int = N_QUBITS) -> CliffordTableau:
    """Uniform Clifford (mod global phase) by sequential symplectic-pair sampling.

    For k = 0..n-1: draw e uniformly among nonzero vectors of the current
    subspace W, draw f in W with omega(e, f) = 1 by rejection, then restrict W
    to the symplectic complement of span(e, f).  Sign bits are uniform.
    """
    rng = np.random.default_rng(rng)
    basis = list(np.eye(2 * n, dtype=np.int64))
    rows_x, rows_z = [], []
    for _ in range(n):
        b = np.array(basis)
        while True:
            e = (rng.integers(0, 2, len(b)) @ b) % 2
            if e.any():
                break
        while True:
            f = (rng.integers(0, 2, len(b)) @ b) % 2
            if _omega(e, f, n) == 1:
                break
        rows_x.append(e)
        rows_z.append(f)
        projected = [(v + _omega(v, f, n) * e + _omega(v, e, n) * f) % 2 for v in basis]
        basis = _row_basis(projected)
    m = np.array(rows_x + rows_z, dtype=np.uint8)
    return CliffordTableau(m[:, :n], m[:, n:], rng.integers(0, 2, 2 * n).astype(np.uint8))


def _row_basis(vectors) -> list[np.ndarray]:
    """Independent subset spanning ``vectors`` (Gaussian elimination over GF(2))."""
    out: list[np.ndarray] = []
    pivots: list[int] = []
    for v in vectors:
        w = v.copy()
        for p, bvec in zip(pivots, out):
            if w[p]:
                w = (w + bvec) % 2
        if w.any():
            p = int(np.flatnonzero(w)[0])
            for i, bvec in enumerate(out):
                if bvec[p]:
                    out[i] = (bvec + w) % 2
            out.append(w)
            pivots.append(p)
    return out


# --------------------------------------------------------------------------
# Synthesis
# --------------------------------------------------------------------------

_INV = {"H": "H", "S": "SDG", "SX": "SXDG", "CX": "CX", "X": "X", "Z": "Z"}


def cx_bound(n: int) -> int:
    """Worst-case CX count of ``decompose_clifford``: sum over qubits of 1 + 3(n-1-i) (11 for n = 3)."""
    return sum((1 if i < n - 1 else 0) + 3 * (n - 1 - i) for i in range(n))


def _native(g: Gate) -> list[Gate]:
    """Rewrite a gate over {RZ, SX, CX} (equal up to global phase)."""
    if len(g.qubits) != 1:
        return [g]
    q = g.qubits
    half = math.pi / 2
    table = {
        "H": [Gate("RZ", q, (half,)), Gate("SX", q), Gate("RZ", q, (half,))],
        "S": [Gate("RZ", q, (half,))],
        "SDG": [Gate("RZ", q, (-half,))],
        "Z": [Gate("RZ", q, (math.pi,))],
        "X": [Gate("SX", q), Gate("SX", q)],
        "SX": [Gate("SX", q)],
        "SXDG": [Gate("RZ", q, (math.pi,)), Gate("SX", q), Gate("RZ", q, (math.pi,))],
    }
    return table.get(g.name, [g])


def decompose_clifford(t: CliffordTableau, native: bool = True) -> Circuit:
    """Circuit (over {RZ, SX, CX} when ``native``) whose tableau equals ``t``.

    Reduces the tableau to the identity qubit by qubit; the circuit is the
    reversed list of inverse reduction gates.  Uses at most ``cx_bound(n)`` CX.
    """
    n = t.n
    w = t.copy()
    ops: list[Gate] = []

    def do(name, *q):
        g = Gate(name, q)
        w.apply(g)
        ops.append(g)

    for i in range(n):
        xr, zr = i, n + i
        # Make the X_i image have an X component on qubit i.
        if not w.x[xr, i]:
            js = [j for j in range(i, n) if w.x[xr, j]]
            if not js:
                js = [j for j in range(i, n) if w.z[xr, j]]
                do("H", js[0])
            if js[0] != i:
                do("CX", js[0], i)
        for j in range(i + 1, n):
            if w.x[xr, j]:
                do("CX", i, j)
        if w.z[xr, i]:
            do("S", i)
        for j in range(i + 1, n):
            if w.z[xr, j]:
                do("H", j)
                do("CX", i, j)
        # X_i image is now +-X_i; turn the Z_i image into +-Z_i.
        if w.x[zr, i]:
            do("SX", i)
        for j in range(i + 1, n):
            if w.x[zr, j] and w.z[zr, j]:
                do("S", j)
            if w.x[zr, j]:
                do("H", j)
            if w.z[zr, j]:
                do("CX", j, i)
        if w.r[xr]:
            do("Z", i)
        if w.r[zr]:
            do("X", i)
    assert w == CliffordTableau.identity(n), "tableau reduction failed"
    gates = [Gate(_INV[g.name], g.qubits) for g in reversed(ops)]
    if native:
        gates = [h for g in gates for h in _native(g)]
    return Circuit(n, gates)


def clifford_unitary(t: CliffordTableau) -> np.ndarray:
    from .circuit import circuit_unitary

    return circuit_unitary(decompose_clifford(t))
