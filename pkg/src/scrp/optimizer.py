"""Circuit rewrites that introduce Z-parity gates, with equivalence checks.

ZPARITY(c1, t, c2) is CX(c1, t) CX(c2, t).  A common-control pair
CX(c, a) CX(c, b) equals H(a, c, b) ZPARITY(a, c, b) H(a, c, b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .circuit import MAX_DENSE_QUBITS, Circuit, CircuitError, Gate, circuit_unitary
from .qec_experiments import schedule_alap

EQUIVALENCE_TOL = 1e-9


# --------------------------------------------------------------------------
# Two-CX fusion
# --------------------------------------------------------------------------


def _dressed_zparity(a: int, shared: int, b: int, common_target: bool) -> list[Gate]:
    zp = Gate("ZPARITY", (a, shared, b))
    if common_target:
        return [zp]
    h = [Gate("H", (q,)) for q in (a, shared, b)]
    return h + [zp] + h


def _try_fuse(gates: list[Gate], i: int, consumed: set[int]):
    """Fusion of gates[i] with its partner, or None.

    Returns (partner index, gates to emit before, fused gates, gates to emit
    after) where the before/after lists are the interposed gates moved past
    one of the two CX.
    """
    first = gates[i]
    for shared, role in ((first.qubits[1], 1), (first.qubits[0], 0)):
        other1 = first.qubits[1 - role]
        j = next((k for k in range(i + 1, len(gates)) if shared in gates[k].qubits), None)
        if j is None or j in consumed:
            continue
        second = gates[j]
        if second.name != "CX" or second.qubits[role] != shared:
            continue
        other2 = second.qubits[1 - role]
        if other2 == other1:
            continue
        # Interposed gates: those touching other1's light cone go after the
        # fused gate, the rest before; any gate needing both sides blocks.
        after_q = {other1}
        before, after, ok = [], [], True
        for k in range(i + 1, j):
            if k in consumed:
                continue
            g = gates[k]
            qs = set(g.qubits)
            if qs & after_q:
                if other2 in qs:
                    ok = False
                    break
                after.append(k)
                after_q |= qs
            else:
                before.append(k)
        if not ok:
            continue
        if role == 1:
            fused = _dressed_zparity(other1, shared, other2, True)
        else:
            fused = _dressed_zparity(other1, shared, other2, False)
        return j, before, fused, after
    return None


def fuse_two_cx(c: Circuit) -> Circuit:
    """Greedy single pass replacing common-target / common-control CX pairs."""
    gates = list(c.gates)
    out: list[Gate] = []
    consumed: set[int] = set()
    i = 0
    while i < len(gates):
        if i in consumed:
            i += 1
            continue
        g = gates[i]
        hit = _try_fuse(gates, i, consumed) if g.name == "CX" else None
        if hit is None:
            out.append(g)
            i += 1
            continue
        j, before, fused, after = hit
        out += [gates[k] for k in before] + fused + [gates[k] for k in after]
        consumed |= {i, j, *before, *after}
        i += 1
    return Circuit(c.n_qubits, out)


# --------------------------------------------------------------------------
# SWAP chains
# --------------------------------------------------------------------------


def _swap_chains(gates: list[Gate]) -> list[tuple[int, int, list[int]]]:
    """Maximal runs SWAP(q0,q1) SWAP(q1,q2) ... of consecutive list entries.

    Returns (first index, last index, path q0..qN).
    """
    chains = []
    i = 0
    while i < len(gates):
        if gates[i].name != "SWAP":
            i += 1
            continue
        path = list(gates[i].qubits)
        j = i + 1
        while j < len(gates) and gates[j].name == "SWAP":
            a, b = gates[j].qubits
            if a == path[-1] and b not in path:
                path.append(b)
            elif b == path[-1] and a not in path:
                path.append(a)
            elif len(path) == 2 and a == path[0] and b not in path:
                path.reverse()
                path.append(b)
            elif len(path) == 2 and b == path[0] and a not in path:
                path.reverse()
                path.append(a)
            else:
                break
            j += 1
        chains.append((i, j - 1, path))
        i = j
    return chains


def swap_chain_decomposition(path: list[int]) -> list[Gate]:
    """SWAP(q0,q1) ... SWAP(q_{N-1},q_N) as N-1 ZPARITY and N+2 CX.

    Each SWAP is B M B with B the boundary CX and M the reversed CX.  The
    boundary orientation alternates so that consecutive boundary CX share a
    target (odd junctions, a bare ZPARITY) or a control (even junctions, a
    Hadamard-dressed ZPARITY).  N = 1 is the plain three-CX identity.
    """
    n = len(path) - 1
    if n < 1:
        raise ValueError("a chain needs at least one SWAP")

    def boundary(m):  # SWAP m (1-based) on (path[m-1], path[m])
        a, b = path[m - 1], path[m]
        return Gate("CX", (a, b)) if m % 2 else Gate("CX", (b, a))

    def middle(m):
        b = boundary(m)
        return Gate("CX", (b.qubits[1], b.qubits[0]))

    out = [boundary(1), middle(1)]
    for m in range(1, n):
        a, s, b = path[m - 1], path[m], path[m + 1]
        out += _dressed_zparity(a, s, b, common_target=(m % 2 == 1))
        out.append(middle(m + 1))
    out.append(boundary(n))
    return cancel_adjacent_hadamards(out)


def cancel_adjacent_hadamards(gates: list[Gate]) -> list[Gate]:
    """Drop H pairs on a qubit with nothing else acting on it in between."""
    out: list[Gate | None] = []
    last_h: dict[int, int] = {}
    for g in gates:
        if g.name == "H":
            q = g.qubits[0]
            k = last_h.pop(q, None)
            if k is not None:
                out[k] = None
                continue
            last_h[q] = len(out)
            out.append(g)
        else:
            for q in g.qubits:
                last_h.pop(q, None)
            out.append(g)
    return [g for g in out if g is not None]


def rewrite_swap_chain(c: Circuit) -> Circuit:
    """Replace every maximal SWAP chain by its Z-parity decomposition."""
    chains = {first: (last, path) for first, last, path in _swap_chains(c.gates)}
    out: list[Gate] = []
    i = 0
    while i < len(c.gates):
        if i in chains:
            last, path = chains[i]
            out += swap_chain_decomposition(path)
            i = last + 1
        else:
            out.append(c.gates[i])
            i += 1
    return Circuit(c.n_qubits, out)


def swap_chain_circuit(n_swaps: int, n_qubits: int | None = None) -> Circuit:
    c = Circuit(n_qubits or n_swaps + 1)
    for m in range(n_swaps):
        c.add("SWAP", m, m + 1)
    return c


def standard_swap_decomposition(c: Circuit) -> Circuit:
    """SWAP(i, j) -> CX(i, j) CX(j, i) CX(i, j)."""
    out = Circuit(c.n_qubits)
    for g in c.gates:
        if g.name == "SWAP":
            i, j = g.qubits
            out.add("CX", i, j).add("CX", j, i).add("CX", i, j)
        else:
            out.extend([g])
    return out


# --------------------------------------------------------------------------
# Verification and reporting
# --------------------------------------------------------------------------


@dataclass
class Equivalence:
    equivalent: bool
    overlap: float
    counterexample: str | None = None

    def __bool__(self) -> bool:
        return self.equivalent


def verify_equivalence(a: Circuit, b: Circuit, tol: float = EQUIVALENCE_TOL) -> Equivalence:
    """Compare unitaries up to global phase; report the worst basis input otherwise."""
    if a.n_qubits != b.n_qubits:
        raise CircuitError("circuits act on different qubit counts")
    n = a.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CircuitError(f"equivalence check limited to {MAX_DENSE_QUBITS} qubits")
    ua, ub = circuit_unitary(a), circuit_unitary(b)
    dim = 2**n
    overlap = abs(np.trace(ua.conj().T @ ub))
    if abs(overlap - dim) <= tol * dim:
        return Equivalence(True, float(overlap / dim))
    # Column k is the image of |k>; score by 1 - |<a k|b k>|.
    scores = 1.0 - np.abs(np.einsum("ij,ij->j", ua.conj(), ub))
    k = int(np.argmax(scores))
    return Equivalence(False, float(overlap / dim), format(k, f"0{n}b"))


UNIT_DURATIONS_KEY = "unit"


def unit_durations(c: Circuit) -> dict[str, float]:
    """1 for multi-qubit gates, 0 for single-qubit gates and directives."""
    return {g.name: (1.0 if len(g.qubits) > 1 and g.is_unitary else 0.0) for g in c.gates}


def depth(c: Circuit, durations: Mapping[str, float] | None = None) -> float:
    if not c.gates:
        return 0.0
    return schedule_alap(c, unit_durations(c) if durations is None else durations).total


@dataclass
class RewriteReport:
    before: Circuit
    after: Circuit
    counts_before: dict[str, int]
    counts_after: dict[str, int]
    depth_before: float
    depth_after: float
    unit_depth_before: float
    unit_depth_after: float
    equivalent: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "counts_before": dict(sorted(self.counts_before.items())),
            "counts_after": dict(sorted(self.counts_after.items())),
            "depth_before": self.depth_before,
            "depth_after": self.depth_after,
            "unit_depth_before": self.unit_depth_before,
            "unit_depth_after": self.unit_depth_after,
            "equivalent": self.equivalent,
            "notes": self.notes,
        }


def depth_report(c: Circuit, durations: Mapping[str, float]) -> dict:
    return {"duration": depth(c, durations), "unit_depth": depth(c), "counts": c.counts()}


def optimize(c: Circuit, durations: Mapping[str, float], verify: bool = True) -> RewriteReport:
    """Rewrite SWAP chains, then fuse remaining CX pairs; report counts and depth."""
    out = fuse_two_cx(rewrite_swap_chain(c))
    rep = RewriteReport(
        c, out, c.counts(), out.counts(), depth(standard_swap_decomposition(c), durations),
        depth(out, durations), depth(standard_swap_decomposition(c)), depth(out),
    )
    rep.notes.append("depth_before uses the three-CX SWAP decomposition")
    if verify:
        if c.n_qubits <= MAX_DENSE_QUBITS:
            rep.equivalent = verify_equivalence(c, out).equivalent
            if not rep.equivalent:
                raise CircuitError("rewrite changed the circuit unitary")
        else:
            rep.notes.append("verification skipped: too many qubits for a dense check")
    return rep


def hadamard_count(c: Circuit) -> int:
    return c.count("H")


def global_phase(a: Circuit, b: Circuit) -> float:
    """Phase phi with U_b = e^{i phi} U_a (meaningful only when equivalent)."""
    ua, ub = circuit_unitary(a), circuit_unitary(b)
    return float(np.angle(np.trace(ua.conj().T @ ub)) % (2 * math.pi))
