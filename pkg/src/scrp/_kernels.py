"""Hot inner loops, each with a numba and a plain-numpy implementation.

The numba versions are used when numba imports and ``SCRP_DISABLE_NUMBA`` is
unset (or ``0``).  Both paths compute the same thing; the numpy path is the
reference and the one exercised when numba is absent.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None


def numba_disabled() -> bool:
    return os.environ.get("SCRP_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = numba is not None and not numba_disabled()


# ---------------------------------------------------------------------------
# Integrating-factor (Lawson) RK4 propagation of a block of state vectors under
#   H(t) = diag(e) + V0 + sum_k (conj(a_k(t)) L_k + a_k(t) L_k^T) / 2
# where diag(e) is the diagonal of H0 (integrated exactly), V0 its off-diagonal
# part, L_k (real) lowering operators and a_k complex envelopes sampled on the
# half-step grid t0, t0 + dt/2, ..., t0 + n dt.  With E(t) = exp(-i e t) and
# N(t, u) = -i V(t) u one step is
#   k1 = N(t, u)
#   k2 = N(t + dt/2, E(dt/2) (u + dt/2 k1))
#   k3 = N(t + dt/2, E(dt/2) u + dt/2 k2)
#   k4 = N(t + dt, E(dt) u + dt E(dt/2) k3)
#   u' = E(dt) u + dt/6 (E(dt) k1 + 2 E(dt/2) (k2 + k3) + k4)
# which is fourth order and exact when V vanishes.  The large detuning and
# anharmonic phases therefore cost nothing in accuracy.
# ---------------------------------------------------------------------------


def rk4_propagate_numpy(psi, h0, lowering, amps, dt):
    psi = np.array(psi, dtype=np.complex128, copy=True)
    n_steps = (amps.shape[1] - 1) // 2
    raising = np.ascontiguousarray(np.transpose(lowering, (0, 2, 1)))
    has_drive = lowering.shape[0] > 0
    e = np.diagonal(h0).real.copy()
    v0 = h0 - np.diag(np.diagonal(h0))
    half = np.exp(-0.5j * dt * e)[:, None]
    full = half * half

    def pot(j):
        if not has_drive:
            return v0
        a = amps[:, j]
        return v0 + 0.5 * (np.tensordot(a.conj(), lowering, 1) + np.tensordot(a, raising, 1))

    c = -1j
    v_end = pot(0)
    for s in range(n_steps):
        v_a = v_end
        v_b = pot(2 * s + 1)
        v_end = pot(2 * s + 2)
        k1 = c * (v_a @ psi)
        k2 = c * (v_b @ (half * (psi + 0.5 * dt * k1)))
        k3 = c * (v_b @ (half * psi + 0.5 * dt * k2))
        k4 = c * (v_end @ (full * psi + dt * half * k3))
        psi = full * psi + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    return psi


def _rk4_propagate_nb(psi, h0, lowering, amps, dt):
    psi = psi.copy()
    n_steps = (amps.shape[1] - 1) // 2
    n_ops = lowering.shape[0]
    d = h0.shape[0]
    c = -1j
    half = np.empty((d, 1), dtype=np.complex128)
    for r in range(d):
        half[r, 0] = np.exp(-0.5j * dt * h0[r, r].real)
    full = half * half
    v_a = np.empty((d, d), dtype=np.complex128)
    v_b = np.empty((d, d), dtype=np.complex128)
    v_c = np.empty((d, d), dtype=np.complex128)

    def fill(v, j):
        for r in range(d):
            for q in range(d):
                v[r, q] = h0[r, q] if r != q else 0.0
        for k in range(n_ops):
            a = amps[k, j]
            lo = 0.5 * np.conj(a)
            hi = 0.5 * a
            for r in range(d):
                for q in range(d):
                    x = lowering[k, r, q]
                    if x != 0.0:
                        v[r, q] += lo * x
                        v[q, r] += hi * x

    fill(v_c, 0)
    for s in range(n_steps):
        v_a[:, :] = v_c
        fill(v_b, 2 * s + 1)
        fill(v_c, 2 * s + 2)
        k1 = c * np.dot(v_a, psi)
        k2 = c * np.dot(v_b, half * (psi + 0.5 * dt * k1))
        k3 = c * np.dot(v_b, half * psi + 0.5 * dt * k2)
        k4 = c * np.dot(v_c, full * psi + dt * half * k3)
        psi = full * psi + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)
    return psi


# ---------------------------------------------------------------------------
# Amplitude-phase damping on one qubit of an n-qubit density matrix
# (qubit 0 is the most significant bit).
# ---------------------------------------------------------------------------


def damp_qubit_numpy(rho, qubit, n_qubits, gamma, coherence):
    left = 2**qubit
    right = 2 ** (n_qubits - qubit - 1)
    r = rho.reshape(left, 2, right, left, 2, right).copy()
    p11 = r[:, 1, :, :, 1, :]
    r[:, 0, :, :, 0, :] += gamma * p11
    r[:, 1, :, :, 1, :] = (1.0 - gamma) * p11
    r[:, 0, :, :, 1, :] *= coherence
    r[:, 1, :, :, 0, :] *= coherence
    return r.reshape(rho.shape)


def _damp_qubit_nb(rho, qubit, n_qubits, gamma, coherence):
    out = rho.copy()
    dim = rho.shape[0]
    bit = 1 << (n_qubits - qubit - 1)
    for i in range(dim):
        for j in range(dim):
            bi = (i & bit) != 0
            bj = (j & bit) != 0
            if bi != bj:
                out[i, j] = coherence * rho[i, j]
            elif bi:
                out[i, j] = (1.0 - gamma) * rho[i, j]
            else:
                out[i, j] = rho[i, j] + gamma * rho[i | bit, j | bit]
    return out


if numba is not None:
    rk4_propagate_numba = numba.njit(cache=True)(_rk4_propagate_nb)
    damp_qubit_numba = numba.njit(cache=True)(_damp_qubit_nb)
else:  # pragma: no cover
    rk4_propagate_numba = None
    damp_qubit_numba = None


def rk4_propagate(psi, h0, lowering, amps, dt):
    """Advance the columns of ``psi`` through ``(amps.shape[1]-1)//2`` integrating-factor RK4 steps."""
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    h0 = np.ascontiguousarray(h0, dtype=np.complex128)
    lowering = np.ascontiguousarray(lowering, dtype=np.float64)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    if USE_NUMBA:
        return rk4_propagate_numba(psi, h0, lowering, amps, float(dt))
    return rk4_propagate_numpy(psi, h0, lowering, amps, float(dt))


def damp_qubit(rho, qubit, n_qubits, gamma, coherence):
    """Apply the amplitude-phase damping map to ``qubit`` of ``rho``."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    if USE_NUMBA:
        return damp_qubit_numba(rho, int(qubit), int(n_qubits), float(gamma), float(coherence))
    return damp_qubit_numpy(rho, qubit, n_qubits, gamma, coherence)
