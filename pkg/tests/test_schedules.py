import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.linalg import expm

from scrp.device_model import GHZ, MHZ, NS, DeviceConfig, TransmonParams, paper_triplet
from scrp.effective_rates import extract_effective_hamiltonian
from scrp.hamiltonian import build_rotating_frame_hamiltonian, lowering_operators
from scrp.paulis import pauli_matrix
from scrp.schedules import (
    Constant, CRTone, FlatTop, IdealRotation, PropagationInfo, RotaryTone, Schedule, ScheduleError,
    UnitarityDriftError, build_cw_schedule, build_ecr_schedule, build_scrp_schedule, project_to_qubit_subspace,
    propagate, qubit_propagator, schedule_carrier,
)


@pytest.fixture(scope="module")
def tri():
    return paper_triplet()


def test_empty_schedule_is_identity(tri):
    u = propagate(Schedule(frame_transmon=1), tri)
    np.testing.assert_allclose(u, np.eye(27), atol=1e-15)


def test_rabi_rotation():
    w = 5 * GHZ
    dev = DeviceConfig([TransmonParams(w, -340 * MHZ, levels=2)])
    om, tau = 25 * MHZ, 20 * NS
    s = Schedule((RotaryTone(0, Constant(om, tau)),), frame_transmon=0, carrier=w)
    u = propagate(s, dev, dt=0.01 * NS)
    np.testing.assert_allclose(u, expm(-0.5j * om * tau * pauli_matrix("X")), atol=1e-10)


def _cw(tri, duration=40 * NS):
    s = build_cw_schedule(tri, [30 * MHZ, 0, 25 * MHZ], 1, duration, 5 * NS)
    return replace(s, carrier=schedule_carrier(s, tri))


def _dense_oracle(s, dev, h):
    h0 = build_rotating_frame_hamiltonian(dev, carrier=s.carrier)
    ops = lowering_operators(dev)
    n = int(round(s.total_duration / h))
    u = np.eye(h0.shape[0], dtype=complex)
    for k in range(n):
        tm = (k + 0.5) * h
        hh = h0.copy()
        for tn in s.tones():
            a = tn.envelope.sample(np.array([tm - tn.start]))[0]
            hh = hh + 0.5 * (np.conj(a) * ops[tn.line] + a * ops[tn.line].T)
        u = expm(-1j * hh * h) @ u
    return u


def test_matches_dense_exponential_oracle(tri):
    s = _cw(tri)
    u = propagate(s, tri, dt=0.01 * NS)
    ref = _dense_oracle(s, tri, 0.001 * NS)
    assert np.linalg.norm(u - ref, 2) <= 1e-7


def test_richardson_ratio(tri):
    s = _cw(tri, 40 * NS)
    a, b, c = (propagate(s, tri, dt=d * NS, reunitarize=False) for d in (0.04, 0.02, 0.01))
    ratio = np.linalg.norm(a - b, 2) / np.linalg.norm(b - c, 2)
    assert 8 <= ratio <= 32


def test_composition(tri):
    s1 = build_cw_schedule(tri, [20 * MHZ, 0, 0], 1, 30 * NS, 2.5 * NS)
    s2 = build_cw_schedule(tri, [0, 5 * MHZ, 15 * MHZ], 1, 25 * NS, 2.5 * NS)
    car = schedule_carrier(s1, tri)
    s1, s2 = replace(s1, carrier=car), replace(s2, carrier=car)
    both = propagate(s1.then(s2), tri, dt=0.01 * NS)
    np.testing.assert_allclose(both, propagate(s2, tri, 0.01 * NS) @ propagate(s1, tri, 0.01 * NS), atol=1e-9)


def test_drift_reported_and_bounded(tri):
    info = PropagationInfo()
    u = propagate(_cw(tri), tri, dt=0.01 * NS, info=info)
    assert 0 < info.raw_drift <= 1e-6
    assert np.linalg.norm(u.conj().T @ u - np.eye(27)) <= 1e-8


def test_drift_error_on_coarse_step(tri):
    with pytest.raises(UnitarityDriftError):
        propagate(_cw(tri), tri, dt=0.2 * NS)


@pytest.mark.parametrize("dt", [0.0, -1.0, 1.0])
def test_bad_dt(tri, dt):
    with pytest.raises(ValueError):
        propagate(_cw(tri), tri, dt=dt)


def test_ecr_layout(tri):
    h = 150 * NS
    s = build_ecr_schedule(tri, 0, 1, 30 * MHZ, 2 * MHZ, h, 5 * NS)
    crs = [i for i in s.instructions if isinstance(i, CRTone)]
    assert [c.envelope.amplitude for c in crs] == [30 * MHZ, -30 * MHZ]
    assert s.count(IdealRotation) == 2
    assert s.total_duration == pytest.approx(2 * h)


def test_ecr_requires_coupling(tri):
    with pytest.raises(ScheduleError):
        build_ecr_schedule(tri, 0, 2, 1.0, 0.0, 100 * NS, 5 * NS)


def test_zero_drive_echoes_refocus_controls(tri):
    """With no drive the echo leaves only phases that do not depend on echoed controls.

    Ideal X_pi pulses act in the bare basis, so the dressed propagator keeps
    an off-diagonal residue of order J / Delta and leaks at order (J / Delta)^2.
    """
    cases = (
        (build_ecr_schedule(tri, 0, 1, 0, 0, 150 * NS, 5 * NS), (0,)),
        (build_scrp_schedule(tri, 0, 2, 1, 0, 0, 0, 150 * NS, 5 * NS), (0, 2)),
    )
    for s, echoed in cases:
        u, leak = qubit_propagator(s, tri, dt=0.02 * NS)
        assert np.abs(u - np.diag(np.diag(u))).max() < 0.05
        phases = np.unwrap(np.angle(np.diag(u))).reshape(2, 2, 2)
        assert np.ptp(phases, axis=echoed).max() < 1e-2
        assert leak < 1e-3


def test_scrp_shorter_than_two_ecrs(tri):
    h = 150 * NS
    scrp = build_scrp_schedule(tri, 0, 2, 1, 1.0, 1.0, 0.0, h, 5 * NS)
    ecr = build_ecr_schedule(tri, 0, 1, 1.0, 0.0, h, 5 * NS)
    assert scrp.total_duration < 2 * ecr.total_duration


def test_scrp_dressing_and_echo_alignment(tri):
    s = build_scrp_schedule(tri, 0, 2, 1, 1.0, 2.0, 0.5, 150 * NS, 5 * NS, dressing=True)
    rots = [i for i in s.instructions if isinstance(i, IdealRotation)]
    assert [(r.qubit, r.axis) for r in rots[:3]] == [(0, "Z"), (2, "Z"), (1, "X")]
    mid = [r for r in rots if r.start == pytest.approx(150 * NS)]
    assert {r.qubit for r in mid} == {0, 2}
    assert len([t for t in s.tones() if isinstance(t, RotaryTone)]) == 2


def test_scrp_topology_errors(tri):
    with pytest.raises(Exception):
        build_scrp_schedule(tri, 0, 0, 1, 1.0, 1.0, 0.0, 100 * NS, 5 * NS)
    with pytest.raises(Exception):
        build_scrp_schedule(tri, 0, 1, 2, 1.0, 1.0, 0.0, 100 * NS, 5 * NS)


def test_overlapping_tones_rejected():
    env = Constant(1.0, 10 * NS)
    with pytest.raises(ScheduleError, match="overlapping"):
        Schedule((CRTone(0, 1, env, 0.0), CRTone(0, 1, env, 5 * NS)))


def test_envelope_invariants():
    with pytest.raises(ScheduleError):
        FlatTop(1.0, 30 * NS, 5 * NS)  # 2 x 20 ns ramps > 30 ns
    with pytest.raises(ScheduleError):
        Constant(1.0, 0.0)
    f = FlatTop(2.0, 100 * NS, 5 * NS)
    t = np.linspace(0, 100 * NS, 200001)
    assert f.area().real == pytest.approx(np.trapezoid(f.sample(t).real, t), rel=1e-6)
    assert f.sample(np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-12)


def test_instructions_sorted_and_json(tri):
    s = build_scrp_schedule(tri, 0, 2, 1, 1.0, 2.0, 0.5, 150 * NS, 5 * NS, dressing=True)
    starts = [i.start for i in s.instructions]
    assert starts == sorted(starts)
    doc = json.loads(s.to_json())
    assert doc["total_duration"] == pytest.approx(300 * NS)
    assert len(doc["instructions"]) == len(s.instructions)


def test_echo_suppresses_ix_and_zz():
    dev = paper_triplet().subset([0, 1])
    h, amp = 150 * NS, 30 * MHZ
    u_ecr, _ = qubit_propagator(build_ecr_schedule(dev, 0, 1, amp, 0, h, 5 * NS), dev, 0.02 * NS)
    u_cr, _ = qubit_propagator(build_cw_schedule(dev, [amp, 0], 1, 2 * h, 5 * NS), dev, 0.02 * NS)
    echo = extract_effective_hamiltonian(u_ecr, 2 * h, block_structure=(0,), method="blockwise")
    bare = extract_effective_hamiltonian(u_cr, 2 * h, block_structure=(0,), method="blockwise")
    for term in ("IX", "ZZ"):
        assert abs(echo[term]) * 10 <= abs(bare[term])
    assert abs(echo["ZX"]) > 0.5 * abs(bare["ZX"])


def test_projection_identity():
    u, leak = project_to_qubit_subspace(np.eye(27), (3, 3, 3))
    np.testing.assert_allclose(u, np.eye(8))
    assert leak == pytest.approx(0.0, abs=1e-15)


def test_two_level_device_has_no_leakage():
    dev = paper_triplet(levels=2)
    s = build_cw_schedule(dev, [30 * MHZ, 0, 30 * MHZ], 1, 50 * NS, 5 * NS)
    _, leak = qubit_propagator(s, dev, 0.02 * NS)
    assert leak < 1e-12


def test_leakage_monotone_in_amplitude(tri):
    leaks = []
    for a in np.linspace(2, 40, 6):
        s = build_cw_schedule(tri, [a * MHZ, 0, a * MHZ], 1, 100 * NS, 0)
        leaks.append(qubit_propagator(s, tri, 0.01 * NS, dressed=False)[1])
    assert leaks[-1] > 0
    assert np.all(np.diff(leaks) >= 0)
