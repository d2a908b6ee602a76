import io
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import expm
from hypothesis import given, settings, strategies as st

from scrp import _kernels

needs_numba = pytest.mark.skipif(_kernels.rk4_propagate_numba is None, reason="numba not installed")


def _problem(seed, dim=6, n_ops=2, steps=20):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h0 = (a + a.conj().T) * 1e8
    low = np.zeros((n_ops, dim, dim))
    for k in range(n_ops):
        low[k] += np.diag(rng.normal(size=dim - 1), 1)
    amps = (rng.normal(size=(n_ops, 2 * steps + 1)) + 1j * rng.normal(size=(n_ops, 2 * steps + 1))) * 5e7
    psi = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))[0]
    return psi, h0, low, amps, 1e-10


@needs_numba
@settings(max_examples=15)
@given(st.integers(0, 10_000), st.integers(2, 9), st.integers(0, 3))
def test_rk4_paths_agree(seed, dim, n_ops):
    args = _problem(seed, dim, n_ops)
    a = _kernels.rk4_propagate_numpy(*args)
    b = _kernels.rk4_propagate_numba(*args)
    assert np.abs(a - b).max() <= 1e-12


def test_rk4_diagonal_is_exact():
    e = np.array([0.0, 3e10, -7e10])
    psi = np.eye(3, dtype=complex)
    amps = np.zeros((0, 41), dtype=complex)
    out = _kernels.rk4_propagate(psi, np.diag(e), np.zeros((0, 3, 3)), amps, 1e-10)
    assert np.abs(out - np.diag(np.exp(-1j * e * 20 * 1e-10))).max() <= 1e-13


def test_rk4_constant_drive_fourth_order():
    psi, h0, low, _, _ = _problem(3, n_ops=1)
    amp = 3e7 + 1e7j
    h = h0 + (np.conj(amp) * low[0] + amp * low[0].T) / 2
    t = 2e-9
    exact = expm(-1j * h * t) @ psi
    errs = []
    for n in (20, 40, 80):
        out = _kernels.rk4_propagate(psi, h0, low, np.full((1, 2 * n + 1), amp), t / n)
        errs.append(np.abs(out - exact).max())
    assert errs[-1] <= 1e-8
    assert 12 <= errs[0] / errs[1] <= 20 and 12 <= errs[1] / errs[2] <= 20


def _random_rho(rng, n):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@needs_numba
@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 4), st.floats(0, 1), st.floats(0, 1))
def test_damp_paths_agree(seed, n, gamma, coherence):
    rng = np.random.default_rng(seed)
    rho = _random_rho(rng, n)
    q = int(rng.integers(n))
    a = _kernels.damp_qubit_numpy(rho, q, n, gamma, coherence)
    b = _kernels.damp_qubit_numba(rho, q, n, gamma, coherence)
    assert np.abs(a - b).max() <= 1e-14


def test_damp_single_qubit_kraus():
    rho = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
    g, c = 0.25, 0.6
    out = _kernels.damp_qubit(rho, 0, 1, g, c)
    assert out == pytest.approx(np.array([[0.3 + g * 0.7, c * rho[0, 1]], [c * rho[1, 0], (1 - g) * 0.7]]))


def test_damp_acts_on_chosen_qubit(rng):
    rho = _random_rho(rng, 3)
    out = _kernels.damp_qubit(rho, 1, 3, 1.0, 0.0)
    # Full relaxation leaves qubit 1 in |0>.
    r = out.reshape(2, 2, 2, 2, 2, 2)
    assert np.abs(r[:, 1]).max() == 0.0
    assert np.trace(out).real == pytest.approx(1.0)


def test_disable_flag_selects_numpy():
    code = (
        "import numpy as np\n"
        "from scrp import _kernels\n"
        "print(_kernels.USE_NUMBA)\n"
    )
    env = dict(os.environ, SCRP_DISABLE_NUMBA="1")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "False"
    env["SCRP_DISABLE_NUMBA"] = "0"
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == str(_kernels.rk4_propagate_numba is not None)


def test_disabled_path_gives_same_physics():
    code = (
        "import numpy as np\n"
        "from scrp.device_model import paper_triplet, NS\n"
        "from scrp.gates import default_scrp_calibration\n"
        "from scrp.schedules import propagate\n"
        "d = paper_triplet()\n"
        "s = default_scrp_calibration(d).schedule(d, dressing=False)\n"
        "u = propagate(s, d, dt=0.05 * NS)\n"
        "import io, sys; b = io.BytesIO(); np.save(b, u); sys.stdout.buffer.write(b.getvalue())\n"
    )
    outs = []
    for flag in ("1", "0"):
        env = dict(os.environ, SCRP_DISABLE_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True)
        assert r.returncode == 0, r.stderr.decode()
        outs.append(r.stdout)
    a, b = (np.load(io.BytesIO(o)) for o in outs)
    assert np.abs(a - b).max() <= 1e-10
