"""Heavy-hex X-parity check: circuits, ALAP scheduling, DD and noisy simulation.

Qubits are ordered (D1, F1, D2, S, D3, F2, D4).  The syndrome qubit S
starts in |+>, the flags in |0>; after the four common-control CX pairs S
carries the X parity of the data, and the flags return to |0> unless an
error occurred.  In the Z-parity form every pair becomes one ZPARITY dressed
by Hadamards and the Hadamards on S cancel, so S is measured directly in Z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from ._kernels import damp_qubit
from .circuit import Circuit, CircuitError, Gate, apply_to_density, gate_unitary
from .device_model import NS, DeviceConfig
from .paulis import rotation

D1, F1, D2, S, D3, F2, D4 = range(7)
N_QUBITS = 7
DATA = (D1, D2, D3, D4)
FLAGS = (F1, F2)
LABELS = ("D1", "F1", "D2", "S", "D3", "F2", "D4")
INPUT_LABELS = tuple("".join(p) for p in product("+-", repeat=4))

IBM_DT = 2.0 / 9.0 * NS
# Reconstructed: ALAP totals 2 h + 6 cx = 2261 ns and 2 h + 3 zp = 1365 ns.
# A ZPARITY is the 1664-sample SCRP pulse plus the 160-sample X_pi dressing.
PAPER_DURATIONS = {
    "RZ": 0.0,
    "Z": 0.0,
    "S": 0.0,
    "SDG": 0.0,
    "SX": 160 * IBM_DT,
    "SXDG": 160 * IBM_DT,
    "X": 160 * IBM_DT,
    "Y": 160 * IBM_DT,
    "RX": 160 * IBM_DT,
    "H": 335 * IBM_DT,
    "I": 0.0,
    "CX": 1584 * IBM_DT,
    "ZPARITY": 1824 * IBM_DT,
    "MEASURE": 860 * NS,
    "BARRIER": 0.0,
}
X_DURATION = PAPER_DURATIONS["X"]


# --------------------------------------------------------------------------
# Circuits
# --------------------------------------------------------------------------


def build_xparity_cnot() -> Circuit:
    """Eight CX in four common-control pairs, S rotated to and from the X basis."""
    c = Circuit(N_QUBITS)
    c.add("H", S)
    c.add("CX", S, F1).add("CX", S, F2)
    c.add("CX", F1, D1).add("CX", F2, D3)
    c.add("CX", F1, D2).add("CX", F2, D4)
    c.add("CX", S, F1).add("CX", S, F2)
    c.add("H", S)
    return c


def build_xparity_parity() -> Circuit:
    """The same check with four ZPARITY gates (c1, t, c2) and Hadamard dressing."""
    c = Circuit(N_QUBITS)
    for q in FLAGS:
        c.add("H", q)
    c.add("ZPARITY", F1, S, F2)
    for q in DATA:
        c.add("H", q)
    c.add("ZPARITY", D1, F1, D2).add("ZPARITY", D3, F2, D4)
    for q in DATA:
        c.add("H", q)
    c.add("ZPARITY", F1, S, F2)
    for q in FLAGS:
        c.add("H", q)
    return c


def expand_zparity(c: Circuit, fence: bool = True) -> Circuit:
    """Two-CX implementation: ZPARITY(c1, t, c2) -> CX(c1, t) CX(c2, t).

    With ``fence`` the pair is wrapped in barriers on its three qubits so it
    is scheduled as one composite instruction, like a calibrated gate.
    """
    out = Circuit(c.n_qubits)
    for g in c.gates:
        if g.name == "ZPARITY":
            c1, t, c2 = g.qubits
            if fence:
                out.add("BARRIER", c1, t, c2)
            out.add("CX", c1, t).add("CX", c2, t)
            if fence:
                out.add("BARRIER", c1, t, c2)
        else:
            out.extend([g])
    return out


def parity_circuit(impl: str) -> Circuit:
    if impl == "scrp":
        return build_xparity_parity()
    if impl == "twocx":
        return expand_zparity(build_xparity_parity())
    raise ValueError(f"unknown implementation {impl!r}")


# --------------------------------------------------------------------------
# Scheduling
# --------------------------------------------------------------------------


@dataclass
class ScheduledCircuit:
    circuit: Circuit
    starts: list[float]
    durations: list[float]
    total: float

    def end(self, i: int) -> float:
        return self.starts[i] + self.durations[i]

    def order(self) -> list[int]:
        """Gate indices by start time (stable for ties)."""
        return sorted(range(len(self.starts)), key=lambda i: (self.starts[i], i))

    def idle_intervals(self) -> dict[int, list[tuple[float, float]]]:
        """Per qubit, the uncovered parts of [0, total] (zero-length gaps dropped).

        Leading and trailing idles count: inputs are prepared at time 0 and
        read out at ``total``.
        """
        busy: dict[int, list[tuple[float, float]]] = {q: [(0.0, 0.0)] for q in range(self.circuit.n_qubits)}
        for i, g in enumerate(self.circuit.gates):
            if g.name == "BARRIER":
                continue
            for q in g.qubits:
                busy[q].append((self.starts[i], self.end(i)))
        out: dict[int, list[tuple[float, float]]] = {}
        for q, spans in busy.items():
            spans.sort()
            spans.append((self.total, self.total))
            out[q] = [(a[1], b[0]) for a, b in zip(spans, spans[1:]) if b[0] - a[1] > 1e-15]
        return out

    def check(self) -> None:
        for q in range(self.circuit.n_qubits):
            spans = sorted(
                (self.starts[i], self.end(i))
                for i, g in enumerate(self.circuit.gates)
                if q in g.qubits and g.name != "BARRIER"
            )
            for a, b in zip(spans, spans[1:]):
                if b[0] < a[1] - 1e-15:
                    raise CircuitError(f"overlapping gates on qubit {q}")


def _duration(g: Gate, durations: Mapping[str, float]) -> float:
    if g.name == "DELAY":
        return g.params[0]
    try:
        d = float(durations[g.name])
    except KeyError as exc:
        raise CircuitError(f"no duration for gate {g.name}") from exc
    if d < 0:
        raise CircuitError(f"negative duration for {g.name}")
    return d


def schedule_alap(c: Circuit, durations: Mapping[str, float] = PAPER_DURATIONS) -> ScheduledCircuit:
    """Right-align every gate against its successors on shared qubits."""
    durs = [_duration(g, durations) for g in c.gates]
    # Latest finish time measured backwards from the common end.
    free = {q: 0.0 for q in range(c.n_qubits)}
    back_start = [0.0] * len(c.gates)
    for i in range(len(c.gates) - 1, -1, -1):
        g = c.gates[i]
        qs = g.qubits if g.qubits else tuple(range(c.n_qubits))
        t_end = max(free[q] for q in qs)
        back_start[i] = t_end + durs[i]
        for q in qs:
            free[q] = back_start[i]
    total = max(free.values()) if c.gates else 0.0
    starts = [total - b for b in back_start]
    return ScheduledCircuit(c, starts, durs, total)


def insert_dd(sc: ScheduledCircuit, x_duration: float = X_DURATION) -> ScheduledCircuit:
    """Fill idle gaps of at least two X pulses with tau, X(+pi), 2 tau, X(-pi), tau."""
    gates = list(sc.circuit.gates)
    starts = list(sc.starts)
    durs = list(sc.durations)
    for q, gaps in sc.idle_intervals().items():
        for a, b in gaps:
            idle = b - a
            if idle < 2 * x_duration:
                continue
            tau = (idle - 2 * x_duration) / 4
            t = a
            for g, d in (
                (Gate("DELAY", (q,), (tau,)), tau),
                (Gate("RX", (q,), (math.pi,)), x_duration),
                (Gate("DELAY", (q,), (2 * tau,)), 2 * tau),
                (Gate("RX", (q,), (-math.pi,)), x_duration),
                (Gate("DELAY", (q,), (tau,)), tau),
            ):
                gates.append(g)
                starts.append(t)
                durs.append(d)
                t += d
    order = sorted(range(len(gates)), key=lambda i: (starts[i], i))
    return ScheduledCircuit(
        Circuit(sc.circuit.n_qubits, [gates[i] for i in order]),
        [starts[i] for i in order], [durs[i] for i in order], sc.total,
    )


# --------------------------------------------------------------------------
# Noisy simulation
# --------------------------------------------------------------------------


@dataclass
class NoiseModel:
    """Per-qubit T1/T2 damping, optional static Z drift (rad/s) on idle time."""

    t1: Sequence[float]
    t2: Sequence[float]
    z_drift: Sequence[float] | None = None
    readout_error: float = 0.0

    @classmethod
    def from_device(cls, device: DeviceConfig, scale: float = 1.0, z_drift=None) -> "NoiseModel":
        return cls([q.t1 * scale for q in device.transmons], [q.t2 * scale for q in device.transmons], z_drift)

    @classmethod
    def noiseless(cls, n: int = N_QUBITS) -> "NoiseModel":
        return cls([math.inf] * n, [math.inf] * n)


def input_state(label: str) -> np.ndarray:
    """Density matrix with data qubits in the +/- product ``label`` and the rest in |0>."""
    if len(label) != 4 or set(label) - {"+", "-"}:
        raise ValueError(f"input label must be four of '+'/'-', got {label!r}")
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    zero = np.array([1.0, 0.0])
    vecs = [zero] * N_QUBITS
    for q, s in zip(DATA, label):
        vecs[q] = plus if s == "+" else minus
    psi = vecs[0]
    for v in vecs[1:]:
        psi = np.kron(psi, v)
    psi = psi.astype(complex)
    return np.outer(psi, psi.conj())


def expected_syndrome(label: str) -> int:
    return label.count("-") % 2


def expected_data(label: str) -> str:
    return "".join("0" if s == "+" else "1" for s in label)


class TraceDriftError(FloatingPointError):
    pass


TRACE_LIMIT = 1e-9


@dataclass
class SimulationTrace:
    max_trace_error: float = 0.0
    min_eigenvalue: float = 0.0


def _idle(rho, q, dt, noise: NoiseModel):
    if dt <= 0:
        return rho
    if noise.z_drift is not None and noise.z_drift[q] != 0:
        rho = apply_to_density(rho, rotation("Z", noise.z_drift[q] * dt), (q,), N_QUBITS)
    t1, t2 = noise.t1[q], noise.t2[q]
    if math.isinf(t1) and math.isinf(t2):
        return rho
    gamma = 0.0 if math.isinf(t1) else 1.0 - math.exp(-dt / t1)
    coherence = 1.0 if math.isinf(t2) else math.exp(-dt / t2)
    return damp_qubit(rho, q, N_QUBITS, gamma, coherence)


def _decohere(rho, q, dt, noise: NoiseModel):
    """Damping without the coherent drift (used during gates)."""
    return _idle(rho, q, dt, NoiseModel(noise.t1, noise.t2))


def evolve_density(sc: ScheduledCircuit, rho: np.ndarray, noise: NoiseModel,
                   overrides: Mapping[str, np.ndarray] | None = None,
                   trace: SimulationTrace | None = None) -> np.ndarray:
    """Run a scheduled 7-qubit circuit on ``rho`` with per-interval damping.

    Gates act in start-time order.  Each qubit keeps its own clock: idle time
    up to a gate start is damped (plus Z drift), the ideal unitary is applied,
    then the gate duration is damped.  Delays are idle time.
    """
    if sc.circuit.n_qubits != N_QUBITS or rho.shape != (2**N_QUBITS,) * 2:
        raise ValueError("parity simulation needs a 7-qubit circuit and a 128x128 density matrix")
    overrides = overrides or {}
    clock = [0.0] * N_QUBITS
    for i in sc.order():
        g = sc.circuit.gates[i]
        start, end = sc.starts[i], sc.end(i)
        if g.name in ("BARRIER", "MEASURE"):
            continue
        for q in g.qubits:
            rho = _idle(rho, q, start - clock[q], noise)
            clock[q] = start
        if g.name == "DELAY":
            rho = _idle(rho, g.qubits[0], end - start, noise)
        else:
            u = overrides.get(g.name, gate_unitary(g))
            rho = apply_to_density(rho, u, g.qubits, N_QUBITS)
            for q in g.qubits:
                rho = _decohere(rho, q, end - start, noise)
        for q in g.qubits:
            clock[q] = end
        if trace is not None:
            _record(rho, trace)
    for q in range(N_QUBITS):
        rho = _idle(rho, q, sc.total - clock[q], noise)
    if trace is not None:
        _record(rho, trace, eig=True)
    return rho


def _record(rho, trace: SimulationTrace, eig: bool = False) -> None:
    err = abs(np.trace(rho).real - 1.0)
    trace.max_trace_error = max(trace.max_trace_error, err)
    if err > TRACE_LIMIT:
        raise TraceDriftError(f"density-matrix trace drifted by {err:.2e}")
    if eig:
        trace.min_eigenvalue = min(trace.min_eigenvalue, float(np.linalg.eigvalsh(rho).min()))


def readout_distribution(rho: np.ndarray, readout_error: float = 0.0) -> dict[str, float]:
    """Outcome probabilities keyed 'syndrome|D1D2D3D4' with data read in the X basis."""
    h = gate_unitary(Gate("H", (0,)))
    for q in DATA:
        rho = apply_to_density(rho, h, (q,), N_QUBITS)
    probs = np.clip(np.diag(rho).real, 0.0, None).reshape((2,) * N_QUBITS)
    if readout_error:
        flip = np.array([[1 - readout_error, readout_error], [readout_error, 1 - readout_error]])
        for ax in (S,) + DATA:
            probs = np.moveaxis(np.tensordot(flip, np.moveaxis(probs, ax, 0), axes=(1, 0)), 0, ax)
    # Flags are measured but not conditioned on.
    marg = probs.sum(axis=FLAGS)
    out: dict[str, float] = {}
    for s, d1, d2, d3, d4 in product((0, 1), repeat=5):
        # After summing flags the axes are (D1, D2, S, D3, D4).
        out[f"{s}|{d1}{d2}{d3}{d4}"] = float(marg[d1, d2, s, d3, d4])
    total = sum(out.values())
    return {k: v / total for k, v in out.items()}


@dataclass
class ParityOutcome:
    """Outcome weights for one input; counts when ``shots`` is set, else probabilities."""

    input_label: str
    counts: dict[str, float]
    shots: int | None

    def probabilities(self) -> dict[str, float]:
        total = sum(self.counts.values())
        return {k: v / total for k, v in self.counts.items()}


def simulate_noisy(sc: ScheduledCircuit, noise: NoiseModel, input_label: str, shots: int | None = None,
                   rng: np.random.Generator | int | None = None,
                   overrides: Mapping[str, np.ndarray] | None = None,
                   trace: SimulationTrace | None = None) -> ParityOutcome:
    if len(noise.t1) != N_QUBITS or len(noise.t2) != N_QUBITS:
        raise ValueError("noise model must cover all seven qubits")
    rho = evolve_density(sc, input_state(input_label), noise, overrides, trace)
    dist = readout_distribution(rho, noise.readout_error)
    if shots is None:
        return ParityOutcome(input_label, dist, None)
    rng = np.random.default_rng(rng)
    keys = sorted(dist)
    draws = rng.multinomial(int(shots), [dist[k] for k in keys])
    return ParityOutcome(input_label, {k: int(n) for k, n in zip(keys, draws)}, int(shots))


# --------------------------------------------------------------------------
# Statistics
# --------------------------------------------------------------------------


@dataclass
class ErrorReport:
    syndrome_error: float
    syndrome_std: float
    data_error: float
    data_qubit_errors: dict[str, float]
    per_input: dict[str, dict[str, float]] = field(repr=False, default_factory=dict)

    COLUMNS = ("Syndrome error", "Syndrome std", "Data error", "D1", "D2", "D3", "D4")

    def row(self) -> list[float]:
        return [self.syndrome_error, self.syndrome_std, self.data_error] + [
            self.data_qubit_errors[k] for k in ("D1", "D2", "D3", "D4")
        ]

    def to_dict(self) -> dict:
        return {
            "syndrome_error": self.syndrome_error,
            "syndrome_std": self.syndrome_std,
            "data_error": self.data_error,
            "data_qubit_errors": self.data_qubit_errors,
            "per_input": self.per_input,
        }


def error_statistics(outcomes: Sequence[ParityOutcome]) -> ErrorReport:
    """Mean syndrome / data error over the 16 inputs with the syndrome standard error."""
    by_label = {o.input_label: o for o in outcomes}
    missing = [lab for lab in INPUT_LABELS if lab not in by_label]
    if missing:
        raise ValueError(f"missing inputs: {missing}")
    syn, dat, per_q, var = [], [], np.zeros(4), []
    per_input = {}
    for lab in INPUT_LABELS:
        o = by_label[lab]
        probs = o.probabilities()
        want_s, want_d = str(expected_syndrome(lab)), expected_data(lab)
        ps = sum(p for k, p in probs.items() if k[0] != want_s)
        pd = sum(p for k, p in probs.items() if k[2:] != want_d)
        pq = [sum(p for k, p in probs.items() if k[2 + j] != want_d[j]) for j in range(4)]
        syn.append(ps)
        dat.append(pd)
        per_q += pq
        n = o.shots if o.shots else math.inf
        var.append(ps * (1 - ps) / n)
        per_input[lab] = {"syndrome_error": ps, "data_error": pd}
    k = len(INPUT_LABELS)
    return ErrorReport(
        float(np.mean(syn)), float(math.sqrt(sum(var)) / k), float(np.mean(dat)),
        {f"D{j + 1}": float(per_q[j] / k) for j in range(4)}, per_input,
    )


def run_parity_experiment(impl: str, noise: NoiseModel, dd: bool = False, shots: int | None = 40000,
                          seed: int | None = 0, durations: Mapping[str, float] = PAPER_DURATIONS,
                          trace: SimulationTrace | None = None, map_fn=map) -> tuple[ScheduledCircuit, list[ParityOutcome]]:
    """Schedule the check for ``impl`` and simulate all 16 inputs."""
    sc = schedule_alap(parity_circuit(impl), durations)
    if dd:
        sc = insert_dd(sc, durations.get("X", X_DURATION))
    seeds = np.random.SeedSequence(0 if seed is None else seed).spawn(len(INPUT_LABELS))

    def one(args):
        lab, ss = args
        return simulate_noisy(sc, noise, lab, shots, np.random.default_rng(ss), trace=trace)

    return sc, list(map_fn(one, zip(INPUT_LABELS, seeds)))
