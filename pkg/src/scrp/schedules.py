"""Pulse envelopes, echoed CR / SCRP schedules and their propagation."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .device_model import NS, DeviceConfig
from .hamiltonian import (
    build_rotating_frame_hamiltonian,
    computational_indices,
    dressed_basis,
    dressed_frequency,
    embed,
    lowering_operators,
)
from .paulis import polar_unitary, rotation

log = logging.getLogger(__name__)

DEFAULT_DT = 0.01 * NS
RISE_SIGMAS = 4.0
DRIFT_LIMIT = 1e-6
_TIME_EPS = 1e-15


class UnitarityDriftError(RuntimeError):
    pass


class ScheduleError(ValueError):
    pass


# --------------------------------------------------------------------------
# Envelopes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    amplitude: complex
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError("envelope duration must be positive")
        if not np.isfinite(self.amplitude):
            raise ScheduleError("envelope amplitude must be finite")

    def sample(self, t: np.ndarray) -> np.ndarray:
        return np.full(np.shape(t), complex(self.amplitude))

    def area(self) -> complex:
        return self.amplitude * self.duration

    def scaled(self, factor: complex) -> "Constant":
        return replace(self, amplitude=self.amplitude * factor)


@dataclass(frozen=True)
class FlatTop:
    """Gaussian-edged flat-top pulse, each edge 4 sigma long (lifted to zero)."""

    amplitude: complex
    duration: float
    sigma: float

    def __post_init__(self):
        if not self.duration > 0:
            raise ScheduleError("envelope duration must be positive")
        if self.sigma < 0 or 2 * RISE_SIGMAS * self.sigma > self.duration * (1 + 1e-12):
            raise ScheduleError("flat width + 2 risetime must not exceed the duration")
        if not np.isfinite(self.amplitude):
            raise ScheduleError("envelope amplitude must be finite")

    @property
    def rise(self) -> float:
        return RISE_SIGMAS * self.sigma

    @property
    def flat_width(self) -> float:
        return self.duration - 2 * self.rise

    def _edge(self, t):
        floor = math.exp(-0.5 * RISE_SIGMAS**2)
        g = np.exp(-0.5 * ((t - self.rise) / self.sigma) ** 2)
        return (g - floor) / (1 - floor)

    def sample(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.sigma == 0:
            return np.full(t.shape, complex(self.amplitude))
        shape = np.ones_like(t)
        left = t < self.rise
        right = t > self.duration - self.rise
        shape[left] = self._edge(t[left])
        shape[right] = self._edge(self.duration - t[right])
        return self.amplitude * np.clip(shape, 0.0, 1.0)

    def area(self) -> complex:
        if self.sigma == 0:
            return self.amplitude * self.duration
        floor = math.exp(-0.5 * RISE_SIGMAS**2)
        edge = (self.sigma * math.sqrt(2 * math.pi) * 0.5 * math.erf(RISE_SIGMAS / math.sqrt(2)) - floor * self.rise) / (1 - floor)
        return self.amplitude * (self.flat_width + 2 * edge)

    def scaled(self, factor: complex) -> "FlatTop":
        return replace(self, amplitude=self.amplitude * factor)


Envelope = Union[Constant, FlatTop]


# --------------------------------------------------------------------------
# Instructions and schedules
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CRTone:
    control: int
    target_frame: int
    envelope: Envelope
    start: float = 0.0

    @property
    def line(self) -> int:
        return self.control

    @property
    def duration(self) -> float:
        return self.envelope.duration


@dataclass(frozen=True)
class RotaryTone:
    target: int
    envelope: Envelope
    start: float = 0.0

    @property
    def line(self) -> int:
        return self.target

    @property
    def duration(self) -> float:
        return self.envelope.duration


@dataclass(frozen=True)
class IdealRotation:
    qubit: int
    axis: str
    angle: float
    start: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        if self.axis not in ("X", "Y", "Z"):
            raise ScheduleError(f"unknown rotation axis {self.axis}")


@dataclass(frozen=True)
class Delay:
    qubit: int
    duration: float
    start: float = 0.0


Instruction = Union[CRTone, RotaryTone, IdealRotation, Delay]
_TONES = (CRTone, RotaryTone)


@dataclass(frozen=True)
class Schedule:
    instructions: tuple = ()
    frame_transmon: int | None = None
    carrier: float | None = None
    name: str = ""

    def __post_init__(self):
        instrs = tuple(sorted(self.instructions, key=lambda i: i.start))
        for ins in instrs:
            if ins.start < 0:
                raise ScheduleError("instruction start must be >= 0")
        tones = [i for i in instrs if isinstance(i, _TONES)]
        for a_i, a in enumerate(tones):
            for b in tones[a_i + 1:]:
                if a.line == b.line and b.start < a.start + a.duration - _TIME_EPS and a.start < b.start + b.duration - _TIME_EPS:
                    raise ScheduleError(f"overlapping tones on drive line {a.line}")
        object.__setattr__(self, "instructions", instrs)

    @property
    def total_duration(self) -> float:
        ends = [i.start + getattr(i, "duration", 0.0) for i in self.instructions]
        return max(ends, default=0.0)

    def shifted(self, offset: float) -> "Schedule":
        return replace(self, instructions=tuple(replace(i, start=i.start + offset) for i in self.instructions))

    def then(self, other: "Schedule") -> "Schedule":
        """Concatenate ``other`` after this schedule."""
        return replace(self, instructions=self.instructions + other.shifted(self.total_duration).instructions)

    def append(self, *instructions: Instruction) -> "Schedule":
        return replace(self, instructions=self.instructions + tuple(instructions))

    def tones(self) -> list:
        return [i for i in self.instructions if isinstance(i, _TONES)]

    def count(self, kind: type) -> int:
        return sum(isinstance(i, kind) for i in self.instructions)

    def to_json(self) -> str:
        def enc(ins):
            d = {"kind": type(ins).__name__}
            for k, v in asdict(ins).items():
                if isinstance(v, dict):
                    v = {kk: _jsonable(vv) for kk, vv in v.items()}
                    v["shape"] = type(ins.envelope).__name__
                d[k] = _jsonable(v)
            return d

        doc = {
            "name": self.name,
            "frame_transmon": self.frame_transmon,
            "carrier": self.carrier,
            "total_duration": self.total_duration,
            "instructions": [enc(i) for i in self.instructions],
        }
        return json.dumps(doc, indent=2)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _envelope(amplitude: complex, duration: float, sigma: float) -> Envelope:
    if sigma == 0:
        return Constant(amplitude, duration)
    return FlatTop(amplitude, duration, sigma)


def build_ecr_schedule(
    device: DeviceConfig,
    control: int,
    target: int,
    cr_amp: complex,
    rotary_amp: complex,
    half_duration: float,
    rise_sigma: float,
) -> Schedule:
    """Echoed CR: +CR, X_pi(control), -CR, X_pi(control); rotary flips with CR."""
    if not device.is_coupled(control, target):
        raise ScheduleError(f"transmons {control} and {target} are not coupled")
    h = half_duration
    ins: list = []
    for k, sign in enumerate((1.0, -1.0)):
        t0 = k * h
        if cr_amp != 0:
            ins.append(CRTone(control, target, _envelope(sign * cr_amp, h, rise_sigma), t0))
        if rotary_amp != 0:
            ins.append(RotaryTone(target, _envelope(sign * rotary_amp, h, rise_sigma), t0))
        ins.append(IdealRotation(control, "X", math.pi, t0 + h))
    return Schedule(tuple(ins), frame_transmon=target, name="ecr")


def build_scrp_schedule(
    device: DeviceConfig,
    c1: int,
    c2: int,
    t: int,
    cr_amp1: complex,
    cr_amp2: complex,
    rotary_amp: complex,
    half_duration: float | tuple[float, float],
    rise_sigma: float,
    dressing: bool = False,
    target_error: complex = 0.0,
) -> Schedule:
    """Echoed simultaneous-CR schedule on (c1, t, c2).

    ``half_duration`` may be a pair to reuse two CR calibrations of different
    lengths; each CR half-pulse is then placed against the common central
    X_pi echo.  ``target_error`` adds a constant, non-echoed tone on the target
    (an injected Y error when imaginary); it shares the rotary drive line.
    """
    if c1 == c2:
        raise ScheduleError("controls must differ")
    device.check_triplet(c1, t, c2)
    h1, h2 = (half_duration, half_duration) if np.isscalar(half_duration) else half_duration
    half = max(h1, h2)
    ins: list = []
    if dressing:
        ins += [IdealRotation(c1, "Z", math.pi / 2, 0.0), IdealRotation(c2, "Z", math.pi / 2, 0.0), IdealRotation(t, "X", math.pi, 0.0)]
    for k, sign in enumerate((1.0, -1.0)):
        for ctrl, amp, hk in ((c1, cr_amp1, h1), (c2, cr_amp2, h2)):
            if amp != 0:
                start = half - hk if k == 0 else half
                ins.append(CRTone(ctrl, t, _envelope(sign * amp, hk, rise_sigma), start))
        tamp = sign * rotary_amp + target_error
        if tamp != 0:
            ins.append(RotaryTone(t, _envelope(tamp, half, rise_sigma), k * half))
        ins += [IdealRotation(c1, "X", math.pi, (k + 1) * half), IdealRotation(c2, "X", math.pi, (k + 1) * half)]
    return Schedule(tuple(ins), frame_transmon=t, name="scrp")


def build_cw_schedule(device: DeviceConfig, amplitudes: Sequence[complex], frame_transmon: int, duration: float, rise_sigma: float) -> Schedule:
    """Unechoed simultaneous drive: transmon k gets amplitude ``amplitudes[k]``."""
    ins = []
    for k, amp in enumerate(amplitudes):
        if amp == 0:
            continue
        env = _envelope(amp, duration, rise_sigma)
        ins.append(RotaryTone(k, env) if k == frame_transmon else CRTone(k, frame_transmon, env))
    return Schedule(tuple(ins), frame_transmon=frame_transmon, name="cw")


# --------------------------------------------------------------------------
# Propagation
# --------------------------------------------------------------------------


def schedule_carrier(schedule: Schedule, device: DeviceConfig) -> float:
    if schedule.carrier is not None:
        return schedule.carrier
    if schedule.frame_transmon is None:
        return device.transmons[0].frequency
    return dressed_frequency(device, schedule.frame_transmon)


def _embedded_rotation(ins: IdealRotation, device: DeviceConfig) -> np.ndarray:
    lv = device.transmons[ins.qubit].levels
    local = np.eye(lv, dtype=complex)
    local[:2, :2] = rotation(ins.axis, ins.angle)
    return embed(local, ins.qubit, device.dims)


@dataclass
class PropagationInfo:
    raw_drift: float = 0.0
    steps: int = 0
    carrier: float = 0.0
    extra: dict = field(default_factory=dict)


def propagate(
    schedule: Schedule,
    device: DeviceConfig,
    dt: float = DEFAULT_DT,
    initial: np.ndarray | None = None,
    info: PropagationInfo | None = None,
    reunitarize: bool = True,
) -> np.ndarray:
    """Time-ordered propagator of the rotating-frame Hamiltonian.

    Returns the full unitary, or ``U @ initial`` when ``initial`` (a block of
    columns) is given.  Tones are integrated with fixed-step integrating-factor RK4 between
    breakpoints; ideal rotations are applied exactly at their timestamps.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    total = schedule.total_duration
    if total > 0 and dt > total:
        raise ValueError("dt must not exceed the schedule duration")
    carrier = schedule_carrier(schedule, device)
    h0 = build_rotating_frame_hamiltonian(device, carrier=carrier)
    ops = lowering_operators(device)
    dim = h0.shape[0]
    psi = np.eye(dim, dtype=complex) if initial is None else np.array(initial, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]

    tones = schedule.tones()
    rotations = [i for i in schedule.instructions if isinstance(i, IdealRotation)]
    points = {0.0, total}
    for tn in tones:
        points.update((tn.start, tn.start + tn.duration))
    for r in rotations:
        points.add(r.start)
    points = sorted(points)
    merged = [points[0]]
    for p in points[1:]:
        if p - merged[-1] > _TIME_EPS:
            merged.append(p)
    points = merged

    lines = sorted({tn.line for tn in tones})
    line_ops = ops[lines] if lines else np.zeros((0, dim, dim))
    pending = list(rotations)
    steps = 0
    for k, a in enumerate(points):
        while pending and pending[0].start <= a + _TIME_EPS:
            psi = _embedded_rotation(pending.pop(0), device) @ psi
        if k + 1 == len(points):
            break
        b = points[k + 1]
        n = max(1, int(math.ceil((b - a) / dt - 1e-9)))
        h = (b - a) / n
        times = a + 0.5 * h * np.arange(2 * n + 1)
        amps = np.zeros((len(lines), 2 * n + 1), dtype=complex)
        for tn in tones:
            if tn.start <= a + _TIME_EPS and tn.start + tn.duration >= b - _TIME_EPS:
                amps[lines.index(tn.line)] += tn.envelope.sample(times - tn.start)
        active = np.any(amps != 0, axis=1)
        psi = _kernels.rk4_propagate(psi, h0, line_ops[active], amps[active], h)
        steps += n

    gram = psi.conj().T @ psi
    drift = float(np.linalg.norm(gram - np.eye(gram.shape[0])))
    if drift > DRIFT_LIMIT:
        raise UnitarityDriftError(f"raw unitarity drift {drift:.3e} exceeds {DRIFT_LIMIT:.0e}; reduce dt")
    if reunitarize:
        psi = polar_unitary(psi)
    if info is not None:
        info.raw_drift = drift
        info.steps = steps
        info.carrier = carrier
    log.debug("propagated %d steps, raw drift %.2e", steps, drift)
    return psi if initial is None or np.ndim(initial) > 1 else psi[:, 0]


def project_to_qubit_subspace(u: np.ndarray, dims: Sequence[int]) -> tuple[np.ndarray, float]:
    """Computational block of ``u`` (polar re-unitarized) and its leakage."""
    idx = computational_indices(dims)
    block = u[np.ix_(idx, idx)]
    leakage = 1.0 - np.linalg.norm(block) ** 2 / len(idx)
    return polar_unitary(block), float(max(leakage, 0.0))


def qubit_propagator(
    schedule: Schedule,
    device: DeviceConfig,
    dt: float = DEFAULT_DT,
    dressed: bool = True,
    info: PropagationInfo | None = None,
) -> tuple[np.ndarray, float]:
    """Qubit-subspace propagator of ``schedule``, optionally in the dressed basis.

    Only the 2^n computational columns are integrated.  With ``dressed`` the
    in/out states are the eigenstates of the undriven Hamiltonian connected to
    the computational states, which removes the static exchange dressing.
    """
    carrier = schedule_carrier(schedule, device)
    sched = schedule if schedule.carrier is not None else replace(schedule, carrier=carrier)
    idx = computational_indices(device.dims)
    dim = int(np.prod(device.dims))
    if dressed:
        _, vecs = dressed_basis(build_rotating_frame_hamiltonian(device, carrier=carrier).real)
        basis = vecs[:, idx].astype(complex)
    else:
        basis = np.eye(dim, dtype=complex)[:, idx]
    info = info if info is not None else PropagationInfo()
    cols = propagate(sched, device, dt, initial=basis, info=info, reunitarize=True)
    block = basis.conj().T @ cols
    leakage = 1.0 - np.linalg.norm(block) ** 2 / len(idx)
    info.extra["leakage"] = float(max(leakage, 0.0))
    return polar_unitary(block), float(max(leakage, 0.0))
