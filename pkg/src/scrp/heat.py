"""Hamiltonian error amplifying tomography (HEAT) and rotary-tone calibration.

Gate unitaries are on qubits ordered (control, target) for an echoed CR gate
and (c1, t, c2) for an echoed SCRP gate; the target is always qubit 1.
A HEAT sequence prepares the controls in |b>, the target in |+x>, repeats
(gate; target P_pi refocus) N times and measures the target.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .paulis import PAULI, pauli_coefficients, polar_unitary, rotation
from .schedules import (
    DEFAULT_DT,
    CRTone,
    IdealRotation,
    Schedule,
    ScheduleError,
    qubit_propagator,
)

log = logging.getLogger(__name__)

DEFAULT_REPETITIONS = 6
DEFAULT_SHOTS = 400
SWEEP_POINTS = 50
ERROR_PAULIS = ("Y", "Z")
ODD_BLOCKS = ("01", "10")
EVEN_BLOCKS = ("00", "11")


class MissingMeasurementError(KeyError):
    pass


@dataclass(frozen=True)
class HeatSpec:
    repetitions: int
    refocus_pauli: str
    control_bits: str
    measure_basis: str

    def __post_init__(self):
        if self.repetitions <= 0 or self.repetitions % 2:
            raise ValueError("HEAT needs an even positive number of repetitions")
        if self.refocus_pauli not in ERROR_PAULIS:
            raise ValueError("refocus Pauli must be Y or Z")
        if self.measure_basis not in ("X", "Y", "Z"):
            raise ValueError("measurement basis must be X, Y or Z")
        if not self.control_bits or set(self.control_bits) - {"0", "1"}:
            raise ValueError("control bits must be a nonempty bitstring")


@dataclass(frozen=True)
class BlockRotation:
    """U_b = exp(-i (angle/2) axis . (X, Y, Z))."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-8:
            raise ValueError("rotation axis must be a unit vector")

    def unitary(self) -> np.ndarray:
        nx, ny, nz = self.axis
        gen = nx * PAULI["X"] + ny * PAULI["Y"] + nz * PAULI["Z"]
        return math.cos(self.angle / 2) * np.eye(2) - 1j * math.sin(self.angle / 2) * gen

    def coefficients(self) -> dict[str, complex]:
        """A_P = -i n_P sin(angle/2) for P in X, Y, Z; A_I = cos(angle/2)."""
        s = math.sin(self.angle / 2)
        out = {"I": complex(math.cos(self.angle / 2))}
        out.update({p: -1j * n * s for p, n in zip("XYZ", self.axis)})
        return out


# --------------------------------------------------------------------------
# Block-diagonal unitaries and the Walsh relation
# --------------------------------------------------------------------------


def _block_index(bits: str, target_bit: int) -> list[int]:
    """Basis indices (target 0, target 1) for control bits around target qubit 1."""
    full0 = bits[0] + "0" + bits[1:]
    full1 = bits[0] + "1" + bits[1:]
    return [int(full0, 2), int(full1, 2)]


def block_diagonal_unitary(blocks: Mapping[str, np.ndarray]) -> np.ndarray:
    """Assemble a controls-diagonal unitary from 2x2 target blocks keyed by control bits."""
    k = len(next(iter(blocks)))
    n = k + 1
    u = np.zeros((2**n, 2**n), dtype=complex)
    for bits in ("".join(b) for b in itertools.product("01", repeat=k)):
        idx = _block_index(bits, 1)
        u[np.ix_(idx, idx)] = blocks[bits]
    return u


def _walsh_sign(bits: str, label_ctrl: str) -> int:
    s = 1
    for b, q in zip(bits, label_ctrl):
        if q == "Z" and b == "1":
            s = -s
    return s


def _labels_for(k: int, pauli: str) -> list[str]:
    out = []
    for ctrl in itertools.product("IZ", repeat=k):
        out.append(ctrl[0] + pauli + "".join(ctrl[1:]))
    return out


def walsh_forward(coeffs: Mapping[str, complex], pauli: str, k: int) -> dict[str, complex]:
    """A_P^b = sum_QR (+-1) A_QPR from label coefficients."""
    out = {}
    for bits in ("".join(b) for b in itertools.product("01", repeat=k)):
        total = 0j
        for lab in _labels_for(k, pauli):
            ctrl = lab[0] + lab[2:]
            total += _walsh_sign(bits, ctrl) * coeffs.get(lab, 0.0)
        out[bits] = total
    return out


def walsh_reconstruct(per_block: Mapping[str, complex], pauli: str = "P") -> dict[str, complex]:
    """Invert the +-1 block relation: A_QPR = 2^-k sum_b (+-1) A_P^b.

    ``per_block`` maps control bits ("0"/"1" or "00".."11") to A_P^b.  Labels
    use ``pauli`` as the middle letter.
    """
    keys = list(per_block)
    k = len(keys[0]) if keys else 0
    expected = {"".join(b) for b in itertools.product("01", repeat=k)}
    if k not in (1, 2) or set(keys) != expected:
        raise ValueError("incomplete block set")
    out = {}
    for lab in _labels_for(k, pauli):
        ctrl = lab[0] + lab[2:]
        out[lab] = sum(_walsh_sign(b, ctrl) * per_block[b] for b in expected) / 2**k
    return out


def unitary_coefficients(u: np.ndarray) -> dict[str, complex]:
    """A_QPR = Tr(QPR U) / 2^n, the Pauli expansion coefficients of U itself."""
    return pauli_coefficients(u)


# --------------------------------------------------------------------------
# Sequences
# --------------------------------------------------------------------------


def _controls_of(gate: Schedule) -> list[int]:
    seen: list[int] = []
    for ins in gate.instructions:
        if isinstance(ins, CRTone) and ins.control not in seen:
            seen.append(ins.control)
    return seen


def _build_heat(spec: HeatSpec, gate: Schedule, controls: Sequence[int], target: int) -> Schedule:
    if len(controls) != len(spec.control_bits):
        raise ScheduleError("control bits do not match the number of controls")
    prep = [IdealRotation(c, "X", math.pi, 0.0) for c, bit in zip(controls, spec.control_bits) if bit == "1"]
    prep.append(IdealRotation(target, "Y", math.pi / 2, 0.0))
    seq = Schedule(tuple(prep), frame_transmon=gate.frame_transmon, carrier=gate.carrier, name="heat")
    refocus = Schedule((IdealRotation(target, spec.refocus_pauli, math.pi, 0.0),))
    for _ in range(spec.repetitions):
        seq = seq.then(gate).then(refocus)
    if spec.measure_basis == "Y":
        seq = seq.then(Schedule((IdealRotation(target, "X", math.pi / 2, 0.0),)))
    elif spec.measure_basis == "X":
        seq = seq.then(Schedule((IdealRotation(target, "Y", -math.pi / 2, 0.0),)))
    return seq


def build_heat_sequence_cr(spec: HeatSpec, gate_schedule: Schedule, control: int | None = None, target: int | None = None) -> Schedule:
    """HEAT sequence around an echoed CR gate schedule (one control)."""
    controls = [control] if control is not None else _controls_of(gate_schedule)
    if len(controls) != 1 or len(spec.control_bits) != 1:
        raise ScheduleError("CR HEAT needs exactly one control")
    tgt = target if target is not None else gate_schedule.frame_transmon
    return _build_heat(spec, gate_schedule, controls, tgt)


def build_heat_sequence_scrp(spec: HeatSpec, gate_schedule: Schedule, controls: Sequence[int] | None = None, target: int | None = None) -> Schedule:
    """HEAT sequence around an echoed SCRP gate schedule (controls c1, c2)."""
    ctrls = list(controls) if controls is not None else _controls_of(gate_schedule)
    if len(ctrls) != 2 or len(spec.control_bits) != 2:
        raise ScheduleError("SCRP HEAT needs exactly two controls")
    tgt = target if target is not None else gate_schedule.frame_transmon
    return _build_heat(spec, gate_schedule, ctrls, tgt)


# --------------------------------------------------------------------------
# Expectation values from a gate unitary
# --------------------------------------------------------------------------

_PREP = {"+x": rotation("Y", math.pi / 2), "+y": rotation("X", -math.pi / 2)}


def _target_op(op: np.ndarray, n: int) -> np.ndarray:
    mats = [np.eye(2)] * n
    mats[1] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def heat_expectation(
    gate: np.ndarray,
    bits: str,
    refocus: str,
    basis: str,
    repetitions: int,
    prep: str = "+x",
) -> float:
    """<target basis Pauli> after the HEAT sequence, from the gate's qubit unitary."""
    n = len(bits) + 1
    full = bits[0] + "0" + bits[1:]
    psi = np.zeros(2**n, dtype=complex)
    psi[int(full, 2)] = 1.0
    psi = _target_op(_PREP[prep], n) @ psi
    step = _target_op(rotation(refocus, math.pi), n) @ gate
    psi = np.linalg.matrix_power(step, repetitions) @ psi
    return float(np.real(psi.conj() @ _target_op(PAULI[basis], n) @ psi))


def _sample(e: float, shots: int | None, rng: np.random.Generator | None) -> float:
    e = float(np.clip(e, -1.0, 1.0))
    if shots is None:
        return e
    ups = rng.binomial(shots, 0.5 * (1 + e))
    return 2.0 * ups / shots - 1.0


def required_measurements(kind: str, method: str = "linear") -> list[tuple]:
    """Measurement keys needed by ``estimate_block_coefficients``."""
    k = 1 if kind == "CR" else 2
    blocks = ["".join(b) for b in itertools.product("01", repeat=k)]
    keys = []
    for b in blocks:
        for p in ERROR_PAULIS:
            if method == "exact":
                keys += [(b, p, prep, basis) for prep in ("+x", "+y") for basis in "XYZ"]
            elif kind == "SCRP" and b in EVEN_BLOCKS:
                keys.append((b, p, p))
            else:
                keys.append((b, p, "Z" if p == "Y" else "Y"))
    return keys


def simulate_heat_measurements(
    gate: np.ndarray,
    kind: str,
    repetitions: int = DEFAULT_REPETITIONS,
    method: str = "linear",
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> dict[tuple, float]:
    """Expectations for every key in ``required_measurements`` (exact or shot-sampled)."""
    if shots is not None and rng is None:
        rng = np.random.default_rng()
    out = {}
    for key in required_measurements(kind, method):
        if method == "exact":
            b, p, prep, basis = key
        else:
            (b, p, basis), prep = key, "+x"
        out[key] = _sample(heat_expectation(gate, b, p, basis, repetitions, prep), shots, rng)
    return out


# --------------------------------------------------------------------------
# Estimators
# --------------------------------------------------------------------------


def _get(meas: Mapping, key: tuple) -> float:
    try:
        return meas[key]
    except KeyError:
        raise MissingMeasurementError(f"missing measurement {key}") from None


def _nominal_angle(kind: str, bits: str, rotation_sign: float) -> float:
    if kind == "CR":
        return rotation_sign * (math.pi / 2 if bits == "0" else -math.pi / 2)
    return rotation_sign * {"00": math.pi, "11": -math.pi}.get(bits, 0.0)


def _nominal_axis(refocus: str, angle: float) -> np.ndarray:
    a, vx = math.cos(angle / 2), math.sin(angle / 2)
    m = np.array([0.0, a, -vx]) if refocus == "Y" else np.array([0.0, vx, a])
    return m / np.linalg.norm(m)


def _tomography_coefficient(meas: Mapping, bits: str, refocus: str, n: int, nominal_axis: np.ndarray) -> float:
    """v_P from the measured Bloch rotation of (P_pi U)^N.

    (P_pi U) has cos(phi/2) = -v_P, so for even N its N-th power is a
    rotation by 2 N arcsin(v_P) about an axis near ``nominal_axis``.
    """
    col_x = np.array([_get(meas, (bits, refocus, "+x", s)) for s in "XYZ"])
    col_y = np.array([_get(meas, (bits, refocus, "+y", s)) for s in "XYZ"])
    r = np.column_stack([col_x, col_y, np.cross(col_x, col_y)])
    r = polar_unitary(r).real
    if np.linalg.det(r) < 0:
        r[:, 2] *= -1
    w = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    sin_beta = np.linalg.norm(w) * (1.0 if w @ nominal_axis >= 0 else -1.0)
    cos_beta = 0.5 * (np.trace(r) - 1.0)
    beta = math.atan2(sin_beta, cos_beta)
    return math.sin(beta / (2 * n))


def estimate_block_coefficients(
    measurements: Mapping[tuple, float],
    repetitions: int,
    gate_kind: str,
    method: str = "linear",
    rotation_sign: float = 1.0,
) -> dict[str, dict[str, complex]]:
    """Per-block error coefficients {b: {"Y": A_Y^b, "Z": A_Z^b}}.

    ``method="linear"`` applies the small-error HEAT relations:

    * CR: A_Y = i <Z>_Y / (sqrt2 N), A_Z = -i <Y>_Z / (sqrt2 N);
    * SCRP, b in {01, 10}: A_Y = i <Z>_Y / 2N, A_Z = -i <Y>_Z / 2N;
    * SCRP, b in {00, 11}: A_P = +-i <P>_P / 2N, + for 00 and - for 11.

    ``rotation_sign`` is the sign of the 00-block target rotation (+1 for
    theta_00 = +pi, -1 for the opposite-handed native gate); it multiplies
    the even-block relations.  ``method="exact"`` inverts the measured Bloch
    rotation instead (needs the "+x"/"+y" x "XYZ" keys) and is exact for
    block-diagonal gates while |2 N arcsin v| < pi.
    """
    if gate_kind not in ("CR", "SCRP"):
        raise ValueError("gate kind must be CR or SCRP")
    if repetitions <= 0 or repetitions % 2:
        raise ValueError("repetitions must be even and positive")
    n = repetitions
    k = 1 if gate_kind == "CR" else 2
    out: dict[str, dict[str, complex]] = {}
    for bits in ("".join(b) for b in itertools.product("01", repeat=k)):
        res = {}
        for p in ERROR_PAULIS:
            if method == "exact":
                m0 = _nominal_axis(p, _nominal_angle(gate_kind, bits, rotation_sign))
                res[p] = -1j * _tomography_coefficient(measurements, bits, p, n, m0)
                continue
            if gate_kind == "CR":
                if p == "Y":
                    res[p] = 1j * _get(measurements, (bits, "Y", "Z")) / (math.sqrt(2) * n)
                else:
                    res[p] = -1j * _get(measurements, (bits, "Z", "Y")) / (math.sqrt(2) * n)
            elif bits in ODD_BLOCKS:
                if p == "Y":
                    res[p] = 1j * _get(measurements, (bits, "Y", "Z")) / (2 * n)
                else:
                    res[p] = -1j * _get(measurements, (bits, "Z", "Y")) / (2 * n)
            else:
                sign = (1.0 if bits == "00" else -1.0) * rotation_sign
                res[p] = sign * 1j * _get(measurements, (bits, p, p)) / (2 * n)
        out[bits] = res
    return out


def heat_coefficients(
    gate: np.ndarray,
    kind: str = "SCRP",
    repetitions: int = DEFAULT_REPETITIONS,
    method: str = "linear",
    rotation_sign: float = 1.0,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> dict[str, complex]:
    """HEAT estimate of the error coefficients A_QPR (P in Y, Z) of a gate unitary."""
    meas = simulate_heat_measurements(gate, kind, repetitions, method, shots, rng)
    blocks = estimate_block_coefficients(meas, repetitions, kind, method, rotation_sign)
    out = {}
    for p in ERROR_PAULIS:
        out.update(walsh_reconstruct({b: v[p] for b, v in blocks.items()}, p))
    return out


# --------------------------------------------------------------------------
# Cost and calibration
# --------------------------------------------------------------------------

COST_LABELS = tuple(q + p + r for q in "IZ" for p in ERROR_PAULIS for r in "IZ")


def rotary_cost(coeffs: Mapping[str, complex]) -> float:
    """Sum of |A_QPR| over Q, R in {I, Z} and P in {Y, Z}; absent labels count as 0."""
    return float(sum(abs(coeffs.get(lab, 0.0)) for lab in COST_LABELS))


@dataclass
class CalibrationResult:
    best_amplitude: float
    cost_curve: np.ndarray
    mode: str

    def to_dict(self) -> dict:
        return {
            "best_amplitude": float(self.best_amplitude),
            "mode": self.mode,
            "cost_curve": [[float(a), float(c)] for a, c in self.cost_curve],
        }


class CalibrationError(RuntimeError):
    pass


GateSource = Callable[[float], "Schedule | np.ndarray"]


def calibrate_rotary_amplitude(
    device,
    base_schedule_builder: GateSource,
    sweep_max: float,
    mode: str = "fast",
    points: int = SWEEP_POINTS,
    dt: float = DEFAULT_DT,
    repetitions: int = DEFAULT_REPETITIONS,
    rotation_sign: float = -1.0,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> CalibrationResult:
    """Sweep the rotary amplitude over ``points`` equally spaced values in [0, sweep_max].

    ``base_schedule_builder(amplitude)`` returns either a gate Schedule (SCRP,
    no dressing) that is propagated on ``device``, or directly an 8x8 qubit
    unitary.  ``mode="fast"`` scores the Pauli coefficients of the unitary;
    ``mode="heat"`` scores the simulated HEAT estimate.  The smallest cost
    wins, ties (within 1e-12) going to the smaller amplitude.
    """
    if not sweep_max > 0:
        raise ValueError("sweep_max must be positive")
    if mode not in ("fast", "heat"):
        raise ValueError("mode must be 'fast' or 'heat'")
    grid = np.linspace(0.0, sweep_max, points)
    costs = np.empty(points)
    for i, amp in enumerate(grid):
        try:
            gate = base_schedule_builder(float(amp))
            if isinstance(gate, Schedule):
                gate, _ = qubit_propagator(gate, device, dt)
            if mode == "fast":
                costs[i] = rotary_cost(unitary_coefficients(gate))
            else:
                costs[i] = rotary_cost(heat_coefficients(gate, "SCRP", repetitions, "linear", rotation_sign, shots, rng))
        except CalibrationError:
            raise
        except Exception as exc:
            raise CalibrationError(f"sweep point {i} (amplitude {amp:.6g}) failed: {exc}") from exc
        log.debug("rotary sweep %d/%d amp=%.4g cost=%.4g", i + 1, points, amp, costs[i])
    best = 0
    for i in range(1, points):
        if costs[i] < costs[best] - 1e-12:
            best = i
    return CalibrationResult(float(grid[best]), np.column_stack([grid, costs]), mode)
