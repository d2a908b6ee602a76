"""Perturbative effective rates and numerical effective-Hamiltonian extraction.

Rates follow the convention H_eff = sum_P (omega_P / 2) P, so a Pauli
coefficient c_P = Tr(P H) / 2^n corresponds to the rate omega_P = 2 c_P.
Pauli labels are ordered (c1, t, c2).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .device_model import NS, DeviceConfig
from .hamiltonian import build_rotating_frame_hamiltonian, computational_indices, dressed_basis, dressed_frequency
from .paulis import pauli_decompose, polar_unitary
from .schedules import DEFAULT_DT, FlatTop, build_cw_schedule, qubit_propagator

__all__ = [
    "EffectiveRates",
    "ResonanceError",
    "BranchAmbiguityError",
    "LeakageError",
    "perturbative_rates",
    "pauli_decompose",
    "extract_effective_hamiltonian",
    "simulate_cw_rates",
    "static_zz_rates",
    "cross_drive_scan",
    "CrossDriveScan",
    "triplet_indices",
]

BRANCH_MARGIN = 1e-3
OFF_BLOCK_LIMIT = 1e-3
CW_DURATION = 200 * NS
CW_SIGMA = 10 * NS


class ResonanceError(ValueError):
    pass


class BranchAmbiguityError(ValueError):
    pass


class LeakageError(ValueError):
    pass


@dataclass(frozen=True)
class EffectiveRates:
    """Zeroth-order ZZ and first-order drive rates, all in rad/s."""

    zzi: float
    izz: float
    zxi: float
    ixz: float
    ixi: float

    def as_dict(self) -> dict[str, float]:
        return {"ZZI": self.zzi, "IZZ": self.izz, "ZXI": self.zxi, "IXZ": self.ixz, "IXI": self.ixi}


def triplet_indices(device: DeviceConfig) -> tuple[int, int, int]:
    """(c1, t, c2) from device roles, else (0, 1, 2)."""
    if all(k in device.roles for k in ("c1", "t", "c2")):
        return device.roles["c1"], device.roles["t"], device.roles["c2"]
    if device.n < 3:
        raise ValueError("need at least three transmons")
    return 0, 1, 2


def _guard(value: float, name: str, scale: float) -> float:
    if abs(value) <= 1e-12 * scale:
        raise ResonanceError(f"vanishing denominator {name}")
    return value


def perturbative_rates(device: DeviceConfig, omega_c1: float, omega_c2: float, omega_t: float = 0.0) -> EffectiveRates:
    """Leading-order closed-form rates for the (c1, t, c2) triplet of ``device``.

    ZZ rates are zeroth order in the drives; ZXI, IXZ, IXI are first order.
    The c2 ZZ expression uses the target anharmonicity in its first
    denominator so that it is the mirror image of the c1 expression.
    """
    c1, t, c2 = triplet_indices(device)
    tr = device.transmons
    a_c1, a_t, a_c2 = tr[c1].anharmonicity, tr[t].anharmonicity, tr[c2].anharmonicity
    d1 = tr[c1].frequency - tr[t].frequency
    d2 = tr[c2].frequency - tr[t].frequency
    j1, j2 = device.coupling(c1, t), device.coupling(c2, t)
    scale = max(abs(d1), abs(d2), abs(a_c1), abs(a_t), abs(a_c2))
    _guard(d1, "Delta_c1t", scale)
    _guard(d2, "Delta_c2t", scale)
    p1 = _guard(d1 + a_c1, "Delta_c1t + alpha_c1", scale)
    p2 = _guard(d2 + a_c2, "Delta_c2t + alpha_c2", scale)
    m1 = _guard(d1 - a_t, "Delta_c1t - alpha_t", scale)
    m2 = _guard(d2 - a_t, "Delta_c2t - alpha_t", scale)
    zzi = j1**2 / m1 - j1**2 / p1
    izz = j2**2 / m2 - j2**2 / p2
    zxi = -j1 * a_c1 / (d1 * p1) * omega_c1
    ixz = -j2 * a_c2 / (d2 * p2) * omega_c2
    ixi = omega_t - j1 / p1 * omega_c1 - j2 / p2 * omega_c2
    return EffectiveRates(zzi, izz, zxi, ixz, ixi)


def _block_keys(n: int, diagonal_qubits: Sequence[int]) -> np.ndarray:
    idx = np.arange(2**n)
    key = np.zeros(2**n, dtype=int)
    for q in diagonal_qubits:
        key = 2 * key + ((idx >> (n - 1 - q)) & 1)
    return key


def block_project(u: np.ndarray, diagonal_qubits: Sequence[int]) -> tuple[np.ndarray, float]:
    """Zero elements that connect different basis states of ``diagonal_qubits``.

    Returns the polar-renormalized block-diagonal unitary and the off-block
    weight ||u_off||_F^2 / dim.
    """
    n = int(round(np.log2(u.shape[0])))
    key = _block_keys(n, diagonal_qubits)
    mask = key[:, None] == key[None, :]
    off = float(np.sum(np.abs(u[~mask]) ** 2) / u.shape[0])
    return polar_unitary(np.where(mask, u, 0.0)), off


def _default_diagonal(n: int) -> tuple[int, ...]:
    return (0, 2) if n == 3 else ()


def _principal_generator(u: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eig(u)
    phases = np.angle(evals)
    if np.any(np.pi - np.abs(phases) < BRANCH_MARGIN):
        raise BranchAmbiguityError("an eigenphase is within the branch margin of +-pi; rates not identifiable")
    # u = V diag(e^{i phi}) V^-1, so i log(u) = -V diag(phi) V^-1.
    return -(evecs * phases) @ np.linalg.inv(evecs)


def _blockwise_generator(u: np.ndarray, diagonal_qubits: Sequence[int]) -> np.ndarray:
    """i log(u) block by block, each block split into common phase and traceless part.

    The common phase of a block is the root of det^(1/m) that keeps the
    traceless eigenphases smallest, so large control-diagonal phases cannot
    alias into the target terms.
    """
    n = int(round(np.log2(u.shape[0])))
    key = _block_keys(n, diagonal_qubits)
    gen = np.zeros_like(u)
    for k in np.unique(key):
        sel = np.flatnonzero(key == k)
        block = u[np.ix_(sel, sel)]
        m = len(sel)
        evals, evecs = np.linalg.eig(block)
        base = np.angle(np.prod(evals)) / m
        best = None
        for j in range(m):
            common = np.angle(np.exp(1j * (base + 2 * np.pi * j / m)))
            rel = np.angle(evals * np.exp(-1j * common))
            score = (round(np.max(np.abs(rel)), 12), abs(common))
            if best is None or score < best[0]:
                best = (score, common, rel)
        _, common, rel = best
        if np.any(np.pi - np.abs(rel) < BRANCH_MARGIN):
            raise BranchAmbiguityError("a block rotation angle is within the branch margin of pi")
        gen[np.ix_(sel, sel)] = -(evecs * (common + rel)) @ np.linalg.inv(evecs)
    return gen


def extract_effective_hamiltonian(
    u: np.ndarray,
    t_g: float,
    block_structure: Sequence[int] | None | str = "controls",
    divisor: float | None = None,
    method: str = "principal",
    off_block_limit: float = OFF_BLOCK_LIMIT,
) -> dict[str, float]:
    """Pauli coefficients of H = i log(u) / t_div.

    ``block_structure`` lists the qubits kept diagonal before taking the log
    ("controls" means (0, 2) for three qubits; None disables projection).
    ``divisor`` overrides t_div (default ``t_g``; pass ``2 * t_g`` for the
    per-echo-segment convention).  ``method`` is "principal" (matrix log on
    the principal branch) or "blockwise" (per control block, see
    ``_blockwise_generator``); they agree whenever every block's eigenphase
    spread is below pi.
    """
    if not t_g > 0:
        raise ValueError("t_g must be positive")
    u = np.asarray(u, dtype=complex)
    n = int(round(np.log2(u.shape[0])))
    if block_structure == "controls":
        block_structure = _default_diagonal(n)
    if block_structure:
        u, off = block_project(u, block_structure)
        if off > off_block_limit:
            raise LeakageError(f"off-block weight {off:.2e} exceeds {off_block_limit:.0e}")
    if method == "principal":
        gen = _principal_generator(u)
    elif method == "blockwise":
        gen = _blockwise_generator(u, block_structure or ())
    else:
        raise ValueError(f"unknown method {method!r}")
    gen = 0.5 * (gen + gen.conj().T)
    return pauli_decompose(gen / (divisor if divisor is not None else t_g), atol=1e-6)


def coefficients_to_rates(coeffs: dict[str, float]) -> dict[str, float]:
    return {k: 2.0 * v for k, v in coeffs.items()}


def _static_generator(device: DeviceConfig, carrier: float) -> dict[str, float]:
    h = build_rotating_frame_hamiltonian(device, carrier=carrier).real
    energies, _ = dressed_basis(h)
    diag = energies[computational_indices(device.dims)]
    return pauli_decompose(np.diag(diag).astype(complex))


def static_zz_rates(device: DeviceConfig) -> dict[str, float]:
    """Exact ZZ rates (rad/s) of the undriven triplet from its dressed energies."""
    c1, t, c2 = triplet_indices(device)
    sub = device.subset([c1, t, c2])
    coeffs = _static_generator(sub, dressed_frequency(sub, 1))
    return {"ZZI": 2 * coeffs["ZZI"], "IZZ": 2 * coeffs["IZZ"], "ZIZ": 2 * coeffs["ZIZ"]}


@dataclass
class CWResult:
    rates: dict[str, float]
    leakage: float
    effective_time: float
    unitary: np.ndarray = field(repr=False)


def simulate_cw_rates(
    device: DeviceConfig,
    omega_c1: float,
    omega_c2: float,
    omega_t: float = 0.0,
    duration: float = CW_DURATION,
    rise_sigma: float = CW_SIGMA,
    dt: float = DEFAULT_DT,
) -> CWResult:
    """Numerically extracted drive-linear rates for a quasi-CW simultaneous drive.

    The drive is a flat-top pulse with adiabatic Gaussian ramps.  The static
    (undriven) control phases are removed using the dressed energies, then the
    principal log is divided by the effective flat-top time
    integral(Omega dt) / Omega_max.  Terms that are linear in the drive
    (ZXI, IXZ, IXI, ZXZ ...) are exact under this normalization; the
    drive-quadratic Stark terms are only approximate.
    """
    c1, t, c2 = triplet_indices(device)
    sub = device.subset([c1, t, c2])
    sched = build_cw_schedule(sub, [omega_c1, omega_t, omega_c2], 1, duration, rise_sigma)
    carrier = dressed_frequency(sub, 1)
    sched = replace(sched, carrier=carrier)
    u, leakage = qubit_propagator(sched, sub, dt)
    static = _static_generator(sub, carrier)
    removal = np.zeros(8, dtype=complex)
    signs = {lab: np.array([np.prod([1 - 2 * ((b >> (2 - q)) & 1) for q, ch in enumerate(lab) if ch == "Z"]) for b in range(8)]) for lab in ("III", "ZII", "IIZ")}
    for lab, s in signs.items():
        removal += static[lab] * s
    u_rel = np.diag(np.exp(1j * removal * duration)) @ u
    env = FlatTop(1.0, duration, rise_sigma)
    t_eff = float(env.area().real)
    coeffs = extract_effective_hamiltonian(u_rel, t_eff, method="blockwise")
    return CWResult(coefficients_to_rates(coeffs), leakage, t_eff, u)


@dataclass
class CrossDriveScan:
    rows: list[dict]
    exponents: dict[str, float]

    def to_csv(self) -> str:
        cols = ["omega_c1", "omega_c2", "ZXI", "IXZ", "ZXZ", "IXI"]
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(",".join(f"{r[c]:.9e}" for c in cols))
        return "\n".join(lines) + "\n"


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> float:
    """Slope of log|y| vs log|x| by least squares."""
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs nonzero data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def cross_drive_scan(
    device: DeviceConfig,
    amp_grid: Sequence[float],
    fixed_amp: float | None = None,
    dt: float = DEFAULT_DT,
    duration: float = CW_DURATION,
    rise_sigma: float = CW_SIGMA,
) -> CrossDriveScan:
    """Rates on two single-parameter sweeps with power-law exponents.

    Sweep A varies Omega_c1 over ``amp_grid`` with Omega_c2 = 0 (ZXI vs its own
    drive).  Sweep B holds Omega_c1 at ``fixed_amp`` (default: the largest grid
    value) and varies Omega_c2; the cross-drive part of ZXI is
    ZXI(Omega_c1, Omega_c2) - ZXI(Omega_c1, 0).
    Reported exponents: "ZXI_vs_c1" and "ZXI_cross_vs_c2".
    """
    c1, t, c2 = triplet_indices(device)
    sub = device.subset([c1, t, c2])
    limit = min(abs(sub.transmons[0].frequency - sub.transmons[1].frequency), abs(sub.transmons[2].frequency - sub.transmons[1].frequency)) / 3
    grid = [float(a) for a in amp_grid]
    if any(abs(a) > limit for a in grid):
        raise ValueError("amplitudes exceed the weak-drive window |Omega| <= |Delta|/3")
    fixed = max(grid, key=abs) if fixed_amp is None else float(fixed_amp)

    def point(a1, a2):
        r = simulate_cw_rates(sub, a1, a2, 0.0, duration, rise_sigma, dt).rates
        return {"omega_c1": a1, "omega_c2": a2, "ZXI": r["ZXI"], "IXZ": r["IXZ"], "ZXZ": r["ZXZ"], "IXI": r["IXI"]}

    rows = [point(a, 0.0) for a in grid]
    base = point(fixed, 0.0)
    cross = [point(fixed, a) for a in grid]
    rows += [base] + cross
    exps = {
        "ZXI_vs_c1": fit_power_law(grid, [r["ZXI"] for r in rows[: len(grid)]]),
        "ZXI_cross_vs_c2": fit_power_law(grid, [r["ZXI"] - base["ZXI"] for r in cross]),
    }
    return CrossDriveScan(rows, exps)
