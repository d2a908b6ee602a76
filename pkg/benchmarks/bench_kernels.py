"""Time the numba and numpy paths of the hot kernels on a three-transmon problem.

Run with ``python benchmarks/bench_kernels.py``.  Both paths are called
directly, so ``SCRP_DISABLE_NUMBA`` does not matter here.
"""
import argparse
import time

import numpy as np

from scrp import _kernels
from scrp.device_model import MHZ, NS, paper_triplet
from scrp.hamiltonian import build_rotating_frame_hamiltonian, dressed_frequency, lowering_operators


def _best(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_rk4(steps, repeats):
    device = paper_triplet()
    h0 = build_rotating_frame_hamiltonian(device, carrier=dressed_frequency(device, 1))
    low = np.array(lowering_operators(device))
    psi = np.eye(h0.shape[0], dtype=complex)
    rng = np.random.default_rng(0)
    amps = (rng.normal(size=(len(device.dims), 2 * steps + 1)) * 10 * MHZ).astype(complex)
    dt = 0.01 * NS
    args = (psi, h0.astype(complex), low.astype(float), amps, dt)
    out = {"numpy": _best(lambda: _kernels.rk4_propagate_numpy(*args), repeats)}
    if _kernels.rk4_propagate_numba is not None:
        _kernels.rk4_propagate_numba(*args)  # compile
        out["numba"] = _best(lambda: _kernels.rk4_propagate_numba(*args), repeats)
        diff = np.abs(_kernels.rk4_propagate_numba(*args) - _kernels.rk4_propagate_numpy(*args)).max()
        out["max_abs_diff"] = float(diff)
    return out


def bench_damping(n_qubits, calls, repeats):
    rng = np.random.default_rng(1)
    a = rng.normal(size=(2**n_qubits,) * 2) + 1j * rng.normal(size=(2**n_qubits,) * 2)
    rho = a @ a.conj().T
    rho /= np.trace(rho)

    def run(fn):
        r = rho
        for k in range(calls):
            r = fn(r, k % n_qubits, n_qubits, 1e-3, 0.998)
        return r

    out = {"numpy": _best(lambda: run(_kernels.damp_qubit_numpy), repeats)}
    if _kernels.damp_qubit_numba is not None:
        run(_kernels.damp_qubit_numba)
        out["numba"] = _best(lambda: run(_kernels.damp_qubit_numba), repeats)
        out["max_abs_diff"] = float(np.abs(run(_kernels.damp_qubit_numba) - run(_kernels.damp_qubit_numpy)).max())
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--calls", type=int, default=200)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()
    for name, res in (
        (f"rk4_propagate ({args.steps} steps, 27 levels)", bench_rk4(args.steps, args.repeats)),
        (f"damp_qubit ({args.calls} calls, 7 qubits)", bench_damping(7, args.calls, args.repeats)),
    ):
        line = f"{name}: numpy {res['numpy'] * 1e3:.1f} ms"
        if "numba" in res:
            line += f", numba {res['numba'] * 1e3:.1f} ms, speedup {res['numpy'] / res['numba']:.1f}x, max diff {res['max_abs_diff']:.1e}"
        print(line)


if __name__ == "__main__":
    main()
