"""Interleaved randomized benchmarking on a line of three qubits.

Random Cliffords are synthesized over {RZ, SX, CX}, CX gates between the two
end qubits of the line are routed through the middle qubit, and every
sequence is closed by the exact inverse Clifford.  Executors turn circuits
into survival probabilities; the decay fit and the interleaved error per
gate follow standard practice.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from ._kernels import damp_qubit
from .circuit import Circuit, CircuitError, Gate, apply_gate, apply_unitary
from .clifford import CliffordTableau, decompose_clifford, sample_uniform_clifford
from .device_model import NS

PAPER_LENGTHS = (2, 3, 4, 5, 7, 9, 12, 17, 25, 38)
PAPER_SAMPLES = 50
PAPER_SHOTS = 400
DIM = 8
LINE = (0, 1, 2)

# Serial-execution durations for the damping executor; RZ is virtual.
RB_DURATIONS = {
    "RZ": 0.0,
    "SX": 35.6 * NS,
    "SXDG": 35.6 * NS,
    "X": 35.6 * NS,
    "CX": 352.0 * NS,
    "ZPARITY": 369.8 * NS,
}


class RBFitError(RuntimeError):
    """Decay fit failed; ``data`` keeps the per-length means and deviations."""

    def __init__(self, message: str, data: dict):
        super().__init__(message)
        self.data = data


# --------------------------------------------------------------------------
# Circuit construction
# --------------------------------------------------------------------------


def route_to_line(c: Circuit, line: Sequence[int] = LINE) -> Circuit:
    """Replace CX between the line's end qubits by four nearest-neighbour CX.

    CX(i, k) becomes CX(j, k) CX(i, j) CX(j, k) CX(i, j) (and likewise with i
    and k exchanged); every other gate is kept as is.
    """
    i, j, k = (int(q) for q in line)
    allowed = {i, j, k}
    out = Circuit(c.n_qubits)
    for g in c.gates:
        if any(q not in allowed for q in g.qubits):
            raise CircuitError(f"{g.name}{g.qubits} acts outside the line {tuple(line)}")
        if g.name == "CX" and set(g.qubits) == {i, k}:
            a, b = g.qubits
            out.extend([Gate("CX", (j, b)), Gate("CX", (a, j)), Gate("CX", (j, b)), Gate("CX", (a, j))])
        else:
            out.extend([g])
    return out


def interleave_circuit(kind: str, line: Sequence[int] = LINE) -> Circuit:
    """The Z-parity gate on the line (c1, t, c2) as 'twocx', 'scrp' or 'identity'."""
    c1, t, c2 = line
    c = Circuit(3)
    if kind == "twocx":
        c.add("CX", c1, t).add("CX", c2, t)
    elif kind == "scrp":
        c.add("ZPARITY", c1, t, c2)
    elif kind != "identity":
        raise ValueError(f"unknown interleave {kind!r}")
    return c


@dataclass(frozen=True)
class RBCircuit:
    length: int
    sample: int
    stream: str
    circuit: Circuit


def build_irb_circuits(
    lengths: Sequence[int] = PAPER_LENGTHS,
    samples_per_length: int = PAPER_SAMPLES,
    interleave: Circuit | None = None,
    line: Sequence[int] = LINE,
    rng_seed: int | None = 0,
) -> list[RBCircuit]:
    """Reference (and, with ``interleave``, interleaved) RB circuits.

    Both streams share the same random Cliffords for a given (length, sample).
    A BARRIER closes every Clifford; a non-empty interleave circuit is
    inserted after each random Clifford with its own BARRIER.  The final
    inverse is computed from the tableau and followed by MEASURE on all qubits.
    """
    if any(int(m) < 1 for m in lengths):
        raise ValueError("lengths must be positive")
    if interleave is not None:
        try:
            CliffordTableau.from_circuit(interleave)
        except CircuitError as exc:
            raise ValueError(f"interleave is not a known Clifford: {exc}") from exc
    rng = np.random.default_rng(rng_seed)
    out: list[RBCircuit] = []
    streams = ["reference"] + (["interleaved"] if interleave is not None else [])
    for m in lengths:
        for s in range(samples_per_length):
            cliffords = [sample_uniform_clifford(rng) for _ in range(int(m))]
            pieces = [route_to_line(decompose_clifford(t), line) for t in cliffords]
            for stream in streams:
                c = Circuit(3)
                for piece in pieces:
                    c.extend(piece.gates).add("BARRIER", 0, 1, 2)
                    if stream == "interleaved" and len(interleave.gates) > 0:
                        c.extend(interleave.gates).add("BARRIER", 0, 1, 2)
                tab = CliffordTableau.from_circuit(c)
                c.extend(route_to_line(decompose_clifford(tab.inverse()), line).gates)
                c.add("BARRIER", 0, 1, 2).add("MEASURE", 0, 1, 2)
                out.append(RBCircuit(int(m), s, stream, c))
    return out


def sequence_tableau(c: Circuit) -> CliffordTableau:
    return CliffordTableau.from_circuit(c)


# --------------------------------------------------------------------------
# Executors
# --------------------------------------------------------------------------


def _embed3(g: Gate) -> np.ndarray:
    """8x8 matrix of ``g`` on three qubits (qubit 0 most significant)."""
    return apply_gate(np.eye(DIM, dtype=complex), g, 3)


class Executor:
    """Density-matrix executor: ideal gates plus hooks for noise."""

    def __init__(self, overrides: dict[str, np.ndarray] | None = None):
        self.overrides = dict(overrides or {})
        self._cache: dict[Gate, np.ndarray] = {}

    def unitary(self, g: Gate) -> np.ndarray:
        u = self._cache.get(g)
        if u is None:
            if g.name in self.overrides:
                u = apply_unitary(np.eye(DIM, dtype=complex), self.overrides[g.name], g.qubits, 3)
            else:
                u = _embed3(g)
            self._cache[g] = u
        return u

    def after_gate(self, rho: np.ndarray, g: Gate) -> np.ndarray:
        return rho

    def at_barrier(self, rho: np.ndarray) -> np.ndarray:
        return rho

    def run(self, c: Circuit) -> float:
        """Probability of returning to |000>."""
        rho = np.zeros((DIM, DIM), dtype=complex)
        rho[0, 0] = 1.0
        for g in c.gates:
            if g.name == "BARRIER":
                rho = self.at_barrier(rho)
            elif g.is_unitary:
                u = self.unitary(g)
                rho = self.after_gate(u @ rho @ u.conj().T, g)
        return float(np.clip(rho[0, 0].real, 0.0, 1.0))


class IdealExecutor(Executor):
    pass


class DepolarizingExecutor(Executor):
    """Gate-independent three-qubit depolarizing channel after every Clifford."""

    def __init__(self, p: float, overrides: dict[str, np.ndarray] | None = None):
        if not 0 <= p <= 1:
            raise ValueError("depolarizing strength must lie in [0, 1]")
        super().__init__(overrides)
        self.p = float(p)

    def at_barrier(self, rho):
        return (1 - self.p) * rho + self.p * np.trace(rho) * np.eye(DIM) / DIM


class DampingExecutor(Executor):
    """Each gate idles all three qubits under T1/T2 damping for its duration."""

    def __init__(self, t1s: Sequence[float], t2s: Sequence[float], durations: dict[str, float] | None = None,
                 overrides: dict[str, np.ndarray] | None = None):
        super().__init__(overrides)
        if len(t1s) != 3 or len(t2s) != 3:
            raise ValueError("need T1 and T2 for each of the three qubits")
        self.t1s, self.t2s = tuple(t1s), tuple(t2s)
        self.durations = dict(RB_DURATIONS if durations is None else durations)

    def after_gate(self, rho, g):
        try:
            d = self.durations[g.name]
        except KeyError as exc:
            raise CircuitError(f"no duration for {g.name}") from exc
        if d == 0:
            return rho
        for q, (t1, t2) in enumerate(zip(self.t1s, self.t2s)):
            rho = damp_qubit(rho, q, 3, 1.0 - math.exp(-d / t1), math.exp(-d / t2))
        return rho


# --------------------------------------------------------------------------
# Fitting
# --------------------------------------------------------------------------


def _decay(m, a, alpha, b):
    return a * alpha**m + b


@dataclass
class DecayFit:
    lengths: list[int]
    mean: list[float]
    std: list[float]
    a: float
    alpha: float
    b: float
    alpha_err: float
    covariance: list[list[float]] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lengths": self.lengths, "mean": self.mean, "std": self.std,
            "A": self.a, "alpha": self.alpha, "B": self.b, "alpha_err": self.alpha_err,
        }


def fit_decay(lengths: Sequence[int], survivals: Sequence[Sequence[float]]) -> DecayFit:
    """Bounded least-squares fit of A alpha^m + B to per-length sample means."""
    m = np.asarray(lengths, dtype=float)
    data = [np.asarray(s, dtype=float) for s in survivals]
    mean = np.array([d.mean() for d in data])
    std = np.array([d.std(ddof=1) if len(d) > 1 else 0.0 for d in data])
    raw = {"lengths": m.tolist(), "mean": mean.tolist(), "std": std.tolist()}
    sem = std / np.sqrt([len(d) for d in data])
    if np.all(sem == 0):
        sigma = None
    else:
        sigma = np.maximum(sem, max(sem[sem > 0].min(), 1e-12) * 1e-3)
    b0 = 1.0 / DIM
    a0 = float(np.clip(mean[np.argmin(m)] - b0, 1e-3, 1.0))
    alpha0 = float(np.clip((max(mean[np.argmax(m)] - b0, 1e-6) / a0) ** (1 / m.max()), 1e-3, 1.0))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, pcov = curve_fit(
                _decay, m, mean, p0=[a0, alpha0, b0], sigma=sigma, absolute_sigma=sigma is not None,
                bounds=([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]), maxfev=20000, xtol=1e-12, ftol=1e-12, gtol=1e-12,
            )
    except (RuntimeError, ValueError) as exc:
        raise RBFitError(f"decay fit failed: {exc}", raw) from exc
    pcov = np.where(np.isfinite(pcov), pcov, 0.0)
    return DecayFit(
        [int(x) for x in m], mean.tolist(), std.tolist(), float(popt[0]), float(popt[1]), float(popt[2]),
        float(np.sqrt(max(pcov[1, 1], 0.0))), pcov.tolist(),
    )


@dataclass
class RBResult:
    reference: DecayFit
    interleaved: DecayFit | None = None
    epg: float | None = None
    epg_err: float | None = None
    epg_kind: str = "interleaved"

    def to_dict(self) -> dict:
        return {
            "epg_kind": self.epg_kind,
            "reference": self.reference.to_dict(),
            "interleaved": None if self.interleaved is None else self.interleaved.to_dict(),
            "epg": self.epg,
            "epg_err": self.epg_err,
        }

    def survival_rows(self) -> list[tuple[str, int, float, float]]:
        rows = []
        for name, fit in (("reference", self.reference), ("interleaved", self.interleaved)):
            if fit is not None:
                rows += [(name, m, mu, sd) for m, mu, sd in zip(fit.lengths, fit.mean, fit.std)]
        return rows


def interleaved_epg(ref: DecayFit, inter: DecayFit, dim: int = DIM) -> tuple[float, float]:
    """EPG = (d-1)/d (1 - alpha_int/alpha_ref) and its first-order uncertainty."""
    scale = (dim - 1) / dim
    if ref.alpha == 0:
        raise RBFitError("reference decay alpha = 0", ref.to_dict())
    epg = scale * (1 - inter.alpha / ref.alpha)
    err = scale * math.hypot(inter.alpha_err / ref.alpha, inter.alpha * ref.alpha_err / ref.alpha**2)
    return epg, err


def _circuit_seed(seed: int | None, length: int, sample: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([0 if seed is None else int(seed), int(length), int(sample)])


def survival_samples(circuits: Iterable[RBCircuit], executor: Executor, shots: int | None = PAPER_SHOTS,
                     seed: int | None = 0, map_fn=map) -> list[tuple[RBCircuit, float]]:
    """Survival probability of each circuit (exact when ``shots`` is None).

    Shot noise for a circuit is drawn from a stream keyed on (seed, length,
    sample), so identical circuits in two streams see identical noise.
    """
    circuits = list(circuits)

    def one(rc: RBCircuit) -> float:
        p = executor.run(rc.circuit)
        if shots is None:
            return p
        rng = np.random.default_rng(_circuit_seed(seed, rc.length, rc.sample))
        return rng.binomial(int(shots), p) / shots

    return list(zip(circuits, map_fn(one, circuits)))


def run_rb(circuits: Iterable[RBCircuit], executor: Executor, shots: int | None = PAPER_SHOTS,
           seed: int | None = 0, map_fn=map) -> RBResult:
    """Fit the reference (and interleaved) decays and the interleaved EPG."""
    results = survival_samples(circuits, executor, shots, seed, map_fn)
    fits: dict[str, DecayFit] = {}
    for stream in ("reference", "interleaved"):
        by_len: dict[int, list[float]] = {}
        for rc, p in results:
            if rc.stream == stream:
                by_len.setdefault(rc.length, []).append(p)
        if by_len:
            lens = sorted(by_len)
            fits[stream] = fit_decay(lens, [by_len[m] for m in lens])
    if "reference" not in fits:
        raise ValueError("no reference circuits supplied")
    res = RBResult(fits["reference"], fits.get("interleaved"))
    if res.interleaved is not None:
        res.epg, res.epg_err = interleaved_epg(res.reference, res.interleaved)
    else:
        # Without an interleaved stream report the error per Clifford.
        scale = (DIM - 1) / DIM
        res.epg, res.epg_err = scale * (1 - res.reference.alpha), scale * res.reference.alpha_err
        res.epg_kind = "reference_epc"
    return res
