import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from scrp.device_model import MHZ, NS, paper_triplet
from scrp.effective_rates import block_project
from scrp.gates import default_scrp_calibration, native_scrp_unitary, scrp_gate_unitary
from scrp.heat import (
    COST_LABELS, SWEEP_POINTS, BlockRotation, CalibrationError, HeatSpec, MissingMeasurementError,
    block_diagonal_unitary, build_heat_sequence_cr, build_heat_sequence_scrp, calibrate_rotary_amplitude,
    estimate_block_coefficients, heat_coefficients, heat_expectation, required_measurements, rotary_cost,
    simulate_heat_measurements, unitary_coefficients, walsh_forward, walsh_reconstruct,
)
from scrp.paulis import PAULI, pauli_matrix, rotation
from scrp.schedules import CRTone, IdealRotation, build_ecr_schedule, build_scrp_schedule

NOMINAL = {"00": -math.pi, "01": 0.0, "10": 0.0, "11": math.pi}


def synthetic_scrp(rng, eps=0.03):
    blocks = {}
    for b, th in NOMINAL.items():
        n = np.array([1.0, 0.0, 0.0]) + rng.normal(scale=eps, size=3)
        blocks[b] = BlockRotation(tuple(n / np.linalg.norm(n)), th + rng.normal(scale=eps)).unitary()
    return block_diagonal_unitary(blocks)


# -- specs and sequences -------------------------------------------------------------


@pytest.mark.parametrize("kw", [dict(repetitions=3), dict(repetitions=0), dict(refocus_pauli="X"), dict(measure_basis="W"), dict(control_bits="2")])
def test_spec_validation(kw):
    base = dict(repetitions=2, refocus_pauli="Y", control_bits="0", measure_basis="Z")
    base.update(kw)
    with pytest.raises(ValueError):
        HeatSpec(**base)


def test_cr_sequence_layout():
    tri = paper_triplet()
    gate = build_ecr_schedule(tri, 0, 1, 30 * MHZ, 0.0, 150 * NS, 5 * NS)
    seq = build_heat_sequence_cr(HeatSpec(2, "Y", "0", "Z"), gate)
    assert seq.count(CRTone) == 2 * 2  # two gate blocks, two CR halves each
    refocus = [i for i in seq.instructions if isinstance(i, IdealRotation) and i.qubit == 1 and i.axis == "Y" and i.angle == math.pi]
    assert len(refocus) == 2
    assert seq.total_duration == pytest.approx(2 * gate.total_duration)


def test_scrp_sequence_layout_and_prep():
    tri = paper_triplet()
    gate = build_scrp_schedule(tri, 0, 2, 1, 30 * MHZ, 30 * MHZ, 0.0, 150 * NS, 5 * NS)
    seq = build_heat_sequence_scrp(HeatSpec(4, "Z", "10", "Y"), gate)
    assert seq.count(CRTone) == 4 * 4
    prep = [i for i in seq.instructions if isinstance(i, IdealRotation) and i.start == 0]
    assert {(i.qubit, i.axis) for i in prep} == {(0, "X"), (1, "Y")}
    with pytest.raises(Exception):
        build_heat_sequence_scrp(HeatSpec(4, "Z", "1", "Y"), gate)


def test_zero_error_gate_gives_zero_signals():
    u = native_scrp_unitary()
    for key, v in simulate_heat_measurements(u, "SCRP", 6).items():
        assert abs(v) < 1e-12, key
    cr = block_diagonal_unitary({"0": rotation("X", math.pi / 2), "1": rotation("X", -math.pi / 2)})
    for key, v in simulate_heat_measurements(cr, "CR", 6).items():
        assert abs(v) < 1e-12, key


@pytest.mark.parametrize("kind", ["CR", "SCRP"])
def test_signal_amplified_linearly(kind):
    eps = 2e-3
    if kind == "CR":
        err = {b: rotation("X", a) @ rotation("Z", eps) for b, a in (("0", math.pi / 2), ("1", -math.pi / 2))}
        bits, basis = "0", "Y"
    else:
        err = {b: rotation("X", th) @ rotation("Z", eps) for b, th in NOMINAL.items()}
        bits, basis = "01", "Y"
    u = block_diagonal_unitary(err)
    sig = np.array([heat_expectation(u, bits, "Z", basis, n) for n in (2, 4, 6, 8)])
    slope = np.polyfit([2, 4, 6, 8], sig, 1)
    assert abs(sig[0]) > 0
    np.testing.assert_allclose(sig, np.polyval(slope, [2, 4, 6, 8]), rtol=0.02)
    assert abs(slope[1]) < 0.02 * abs(sig[-1])


# -- Walsh relation ------------------------------------------------------------------------


def test_walsh_all_equal():
    out = walsh_reconstruct({b: 0.3 for b in ("00", "01", "10", "11")})
    assert out["IPI"] == pytest.approx(0.3)
    assert all(abs(v) < 1e-15 for k, v in out.items() if k != "IPI")


def test_walsh_sign_pattern():
    out = walsh_reconstruct({"00": 0.2, "10": -0.2, "01": 0.2, "11": -0.2})
    assert out["ZPI"] == pytest.approx(0.2)
    assert all(abs(v) < 1e-15 for k, v in out.items() if k != "ZPI")


def test_walsh_cr_and_incomplete():
    assert walsh_reconstruct({"0": 1.0, "1": 0.0}) == {"IP": 0.5, "ZP": 0.5}
    with pytest.raises(ValueError):
        walsh_reconstruct({"00": 1.0, "01": 1.0})


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=4, max_size=4))
def test_walsh_round_trip(vals):
    coeffs = dict(zip(("IYI", "ZYI", "IYZ", "ZYZ"), vals))
    back = walsh_reconstruct(walsh_forward(coeffs, "Y", 2), "Y")
    for k, v in coeffs.items():
        assert abs(back[k] - v) <= 1e-14 * max(1.0, max(abs(x) for x in vals))


def test_walsh_matches_unitary_blocks(rng):
    u = synthetic_scrp(rng)
    coeffs = unitary_coefficients(u)
    per_block = walsh_forward(coeffs, "Y", 2)
    for b in NOMINAL:
        idx = [int(b[0] + t + b[1], 2) for t in "01"]
        assert per_block[b] == pytest.approx(np.trace(PAULI["Y"] @ u[np.ix_(idx, idx)]) / 2, abs=1e-14)


# -- estimators --------------------------------------------------------------------------------


def test_all_zero_measurements_give_zero():
    for kind in ("CR", "SCRP"):
        meas = {k: 0.0 for k in required_measurements(kind)}
        for blk in estimate_block_coefficients(meas, 6, kind).values():
            assert all(v == 0 for v in blk.values())


def test_odd_block_relation():
    meas = {k: 0.0 for k in required_measurements("SCRP")}
    n = 6
    meas[("01", "Y", "Z")] = 0.2 * n
    assert estimate_block_coefficients(meas, n, "SCRP")["01"]["Y"] == pytest.approx(0.1j)


def test_even_block_sign_flip():
    meas = {k: 0.0 for k in required_measurements("SCRP")}
    meas[("00", "Z", "Z")] = meas[("11", "Z", "Z")] = 0.6
    est = estimate_block_coefficients(meas, 6, "SCRP")
    assert est["00"]["Z"] == pytest.approx(0.05j)
    assert est["11"]["Z"] == pytest.approx(-0.05j)
    flipped = estimate_block_coefficients(meas, 6, "SCRP", rotation_sign=-1.0)
    assert flipped["00"]["Z"] == pytest.approx(-0.05j)


def test_cr_relation_scale():
    meas = {k: 0.0 for k in required_measurements("CR")}
    meas[("1", "Y", "Z")] = 0.3
    assert estimate_block_coefficients(meas, 4, "CR")["1"]["Y"] == pytest.approx(0.3j / (math.sqrt(2) * 4))


def test_missing_measurement_and_bad_n():
    with pytest.raises(MissingMeasurementError):
        estimate_block_coefficients({}, 6, "SCRP")
    with pytest.raises(ValueError):
        estimate_block_coefficients({}, 5, "SCRP")


def test_exact_recovery_synthetic(rng):
    for _ in range(20):
        u = synthetic_scrp(rng)
        truth = unitary_coefficients(u)
        est = heat_coefficients(u, "SCRP", 6, "exact", rotation_sign=-1.0)
        for k, v in est.items():
            assert abs(v - truth[k]) <= 1e-10


def test_sampled_recovery_synthetic(rng):
    u = synthetic_scrp(rng)
    truth = unitary_coefficients(u)
    est = heat_coefficients(u, "SCRP", 6, "exact", -1.0, shots=400, rng=rng)
    for k, v in est.items():
        assert abs(v - truth[k]) <= 0.05


def _direct_blocks(u):
    u, _ = block_project(u, (0, 2))
    out = {}
    for b in NOMINAL:
        idx = [int(b[0] + t + b[1], 2) for t in "01"]
        ub = u[np.ix_(idx, idx)]
        ub = ub / np.sqrt(np.linalg.det(ub))
        if b in ("01", "10") and np.trace(ub).real < 0:
            ub = -ub
        out[b] = np.trace(PAULI["Y"] @ ub) / 2
    return out


def test_injected_target_y_error_recovered():
    tri = paper_triplet()
    cal = default_scrp_calibration(tri)
    u, _ = scrp_gate_unitary(tri, cal, target_error=0.03j * MHZ, dt=0.02 * NS)
    est = estimate_block_coefficients(simulate_heat_measurements(u, "SCRP", 6), 6, "SCRP", rotation_sign=-1.0)
    direct = _direct_blocks(u)
    for b in NOMINAL:
        assert est[b]["Y"] == pytest.approx(direct[b], rel=0.10)


# -- cost and calibration --------------------------------------------------------------------------


def test_cost_examples():
    assert rotary_cost({}) == 0
    assert rotary_cost({"ZYI": 0.3j}) == pytest.approx(0.3)
    assert rotary_cost({"ZYI": 0.3 + 0.4j, "IXI": 1.0}) == pytest.approx(0.5)
    assert len(COST_LABELS) == 8 and "IZI" in COST_LABELS


def test_calibration_zero_error_gate():
    res = calibrate_rotary_amplitude(None, lambda a: native_scrp_unitary(), 1.0)
    assert res.best_amplitude == 0.0
    assert res.cost_curve.shape == (SWEEP_POINTS, 2)
    assert res.cost_curve[0, 0] == 0.0


def test_calibration_finds_compensating_amplitude():
    def gate(a):
        return native_scrp_unitary() @ expm(-1j * (0.05 - 0.1 * a) * pauli_matrix("IYI"))

    res = calibrate_rotary_amplitude(None, gate, 1.0)
    costs = res.cost_curve[:, 1]
    assert res.best_amplitude == pytest.approx(0.5, abs=1.0 / 49)
    assert costs.min() <= 0.5 * costs[0]
    heat = calibrate_rotary_amplitude(None, gate, 1.0, mode="heat")
    assert heat.best_amplitude == pytest.approx(0.5, abs=1.0 / 49)


def test_calibration_errors():
    with pytest.raises(ValueError):
        calibrate_rotary_amplitude(None, lambda a: np.eye(8), 0.0)
    with pytest.raises(CalibrationError, match="sweep point 0"):
        calibrate_rotary_amplitude(None, lambda a: 1 / 0, 1.0)
