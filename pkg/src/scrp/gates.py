"""Calibrated SCRP / ECR gate factories and the ideal target unitaries.

Default pulse parameters are not hardware values: the CR amplitudes are
chosen from the leading-order ZXI slope so that each conditional rotation is
pi/2 over the echoed gate, optionally refined against the simulated gate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .device_model import NS, DeviceConfig
from .effective_rates import extract_effective_hamiltonian, perturbative_rates, triplet_indices
from .paulis import pauli_matrix, rotation
from .schedules import DEFAULT_DT, FlatTop, Schedule, build_ecr_schedule, build_scrp_schedule, qubit_propagator

IBM_DT = 2.0 / 9.0 * NS
# 1664 samples of 2/9 ns: the SCRP gate length, two echo halves of 832 samples.
DEFAULT_HALF_DURATION = 832 * IBM_DT
DEFAULT_RISE_SIGMA = 5 * NS
TARGET_ANGLE = -math.pi / 2
# Strong CR drives leave ~1e-3 control population outside the diagonal blocks.
REFINE_OFF_BLOCK_LIMIT = 1e-2


def cnot(control: int, target: int, n: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim))
    for i in range(dim):
        j = i ^ (1 << (n - 1 - target)) if (i >> (n - 1 - control)) & 1 else i
        u[j, i] = 1.0
    return u.astype(complex)


def zparity_unitary() -> np.ndarray:
    """CX(c1 -> t) CX(c2 -> t) on (c1, t, c2): flips t on odd control parity."""
    return cnot(2, 1, 3) @ cnot(0, 1, 3)


def native_scrp_unitary() -> np.ndarray:
    """exp(+i pi/4 (ZXI + IXZ)), the echoed SCRP gate with positive CR amplitudes."""
    gen = pauli_matrix("ZXI") + pauli_matrix("IXZ")
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(1j * math.pi / 4 * w)) @ v.conj().T


def dressing_unitary() -> np.ndarray:
    """Z_{pi/2}(c1) Z_{pi/2}(c2) X_pi(t), applied before the native gate."""
    return np.kron(np.kron(rotation("Z", math.pi / 2), rotation("X", math.pi)), rotation("Z", math.pi / 2))


@dataclass(frozen=True)
class ScrpCalibration:
    c1: int
    t: int
    c2: int
    cr_amp1: complex
    cr_amp2: complex
    rotary_amp: complex = 0.0
    half_duration: float = DEFAULT_HALF_DURATION
    rise_sigma: float = DEFAULT_RISE_SIGMA

    def schedule(self, device: DeviceConfig, dressing: bool = False, target_error: complex = 0.0, rotary_amp: complex | None = None) -> Schedule:
        rot = self.rotary_amp if rotary_amp is None else rotary_amp
        return build_scrp_schedule(
            device, self.c1, self.c2, self.t, self.cr_amp1, self.cr_amp2, rot,
            self.half_duration, self.rise_sigma, dressing=dressing, target_error=target_error,
        )

    @property
    def duration(self) -> float:
        return 2 * self.half_duration

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("cr_amp1", "cr_amp2", "rotary_amp"):
            d[k] = complex(d[k]).real if complex(d[k]).imag == 0 else [complex(d[k]).real, complex(d[k]).imag]
        return d


def effective_cr_time(half_duration: float, rise_sigma: float) -> float:
    """Total integral(|Omega|)/|Omega_max| over both echo halves."""
    if rise_sigma == 0:
        return 2 * half_duration
    return 2 * float(FlatTop(1.0, half_duration, rise_sigma).area().real)


def default_rotary_sweep_max(half_duration: float = DEFAULT_HALF_DURATION, rise_sigma: float = DEFAULT_RISE_SIGMA) -> float:
    """Rotary amplitude giving a 2 pi target rotation per echo half."""
    return 2 * math.pi / (effective_cr_time(half_duration, rise_sigma) / 2)


def default_scrp_calibration(
    device: DeviceConfig,
    half_duration: float = DEFAULT_HALF_DURATION,
    rise_sigma: float = DEFAULT_RISE_SIGMA,
    refine: bool = False,
    dt: float = DEFAULT_DT,
    iterations: int = 3,
) -> ScrpCalibration:
    """CR amplitudes for pi/2 conditional rotations from the leading-order slope.

    With ``refine`` the amplitudes are rescaled against the ZXI / IXZ angles
    extracted from the simulated (undressed, rotary-free) gate.
    """
    c1, t, c2 = triplet_indices(device)
    t_eff = effective_cr_time(half_duration, rise_sigma)
    slope = perturbative_rates(device, 1.0, 1.0, 0.0)
    cal = ScrpCalibration(c1, t, c2, TARGET_ANGLE / (slope.zxi * t_eff), TARGET_ANGLE / (slope.ixz * t_eff), 0.0, half_duration, rise_sigma)
    if not refine:
        return cal
    sub = device.subset([c1, t, c2])
    local = replace(cal, c1=0, t=1, c2=2)
    for _ in range(iterations):
        u, _ = qubit_propagator(local.schedule(sub), sub, dt)
        coeffs = extract_effective_hamiltonian(u, 1.0, method="blockwise", off_block_limit=REFINE_OFF_BLOCK_LIMIT)
        # U = exp(-i H) with H = (angle/2) ZXI, so the ZXI angle is 2 * coeff.
        a1 = local.cr_amp1 * TARGET_ANGLE / (2 * coeffs["ZXI"])
        a2 = local.cr_amp2 * TARGET_ANGLE / (2 * coeffs["IXZ"])
        local = replace(local, cr_amp1=a1, cr_amp2=a2)
    return replace(cal, cr_amp1=local.cr_amp1, cr_amp2=local.cr_amp2)


def scrp_gate_unitary(
    device: DeviceConfig,
    calibration: ScrpCalibration,
    dressing: bool = False,
    target_error: complex = 0.0,
    rotary_amp: complex | None = None,
    dt: float = DEFAULT_DT,
) -> tuple[np.ndarray, float]:
    """Qubit-subspace (dressed-basis) unitary of the SCRP gate and its leakage."""
    return qubit_propagator(calibration.schedule(device, dressing, target_error, rotary_amp), device, dt)


def ecr_gate_unitary(device: DeviceConfig, control: int, target: int, cr_amp: complex, rotary_amp: complex = 0.0,
                     half_duration: float = DEFAULT_HALF_DURATION, rise_sigma: float = DEFAULT_RISE_SIGMA,
                     dt: float = DEFAULT_DT) -> tuple[np.ndarray, float]:
    sub = device.subset([control, target])
    sched = build_ecr_schedule(sub, 0, 1, cr_amp, rotary_amp, half_duration, rise_sigma)
    return qubit_propagator(sched, sub, dt)


def gate_distance(u: np.ndarray, ideal: np.ndarray) -> float:
    """1 - |Tr(ideal^dag u)| / d, a phase-insensitive distance."""
    return float(1.0 - abs(np.trace(ideal.conj().T @ u)) / u.shape[0])


def average_gate_infidelity(u: np.ndarray, ideal: np.ndarray) -> float:
    d = u.shape[0]
    f_pro = abs(np.trace(ideal.conj().T @ u)) ** 2 / d**2
    return float(1.0 - (d * f_pro + 1) / (d + 1))
