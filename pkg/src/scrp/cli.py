"""Command-line entry point: ``scrp <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.  JSON outputs
carry a ``manifest`` block; its ``wall_clock_s`` field is the only
non-deterministic value.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from .channels import coherence_limit
from .circuit import Circuit, CircuitError
from .device_model import MHZ, NS, US, DeviceConfig, DeviceConfigError, device_to_dict, load_device_file, paper_device, paper_triplet

DEVICE_ENV = "SCRP_DEVICE"
DEFAULT_SEED = 20240101
PAPER_T1_US = (122.7, 134.8, 159.7)
PAPER_T2_US = (73.4, 111.4, 170.3)


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    version: str
    wall_clock_s: float = 0.0
    device: dict | None = field(default=None)
    started: float = field(default_factory=time.perf_counter, repr=False)

    def to_dict(self) -> dict:
        self.wall_clock_s = time.perf_counter() - self.started
        d = asdict(self)
        d.pop("started")
        return d


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _load_device(args, default_factory) -> DeviceConfig:
    path = args.device or os.environ.get(DEVICE_ENV)
    if path:
        try:
            return load_device_file(path)
        except OSError as exc:
            raise ValidationError(f"cannot read device file {path}: {exc}") from exc
    return default_factory()


def _map_fn(args):
    threads = args.threads or os.cpu_count() or 1
    if threads <= 1:
        return map, None
    pool = ThreadPoolExecutor(max_workers=threads)
    return pool.map, pool


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_coherence_limit(args, manifest):
    if args.qubits is not None:
        device = _load_device(args, paper_device)
        try:
            ts = [device.transmons[device.index(q)] for q in args.qubits]
        except (IndexError, KeyError) as exc:
            raise ValidationError(f"qubit index out of range for the device: {exc}") from exc
        t1, t2 = [t.t1 for t in ts], [t.t2 for t in ts]
    else:
        t1 = [x * US for x in args.t1]
        t2 = [x * US for x in args.t2]
    value = coherence_limit(args.duration * NS, t1, t2)
    print(f"{value:.4f}")
    if args.out:
        _write(args.out, _dump({"manifest": manifest.to_dict(), "result": {"coherence_limit": value}}))


def cmd_rates(args, manifest):
    from .effective_rates import perturbative_rates, simulate_cw_rates, static_zz_rates

    device = _load_device(args, paper_triplet)
    manifest.device = device_to_dict(device)
    w1, w2 = args.omega_c1 * MHZ, args.omega_c2 * MHZ
    result = {"units": "MHz (omega/2pi)"}
    pert = perturbative_rates(device, w1, w2).as_dict()
    result["perturbative"] = {k: v / MHZ for k, v in pert.items()}
    extracted: dict[str, float] = {}
    if not args.perturbative_only:
        sim = simulate_cw_rates(device, w1, w2, dt=args.dt * NS)
        result["simulated"] = {k: v / MHZ for k, v in sorted(sim.rates.items())}
        result["leakage"] = sim.leakage
        zz = static_zz_rates(device)
        result["static_zz"] = {k: v / MHZ for k, v in zz.items()}
        # ZZ is a zero-drive quantity; the drive terms come from the CW run.
        extracted = {**{k: sim.rates.get(k, np.nan) for k in ("ZXI", "IXZ", "IXI")}, **zz}
    rows = []
    for term, value in pert.items():
        ext = extracted.get(term, np.nan)
        rel = abs(ext - value) / abs(value) if value and np.isfinite(ext) else np.nan
        rows.append((term, value / (2 * np.pi), ext / (2 * np.pi), rel))
    table = _csv(["term", "perturbative_Hz", "extracted_Hz", "rel_err"], rows)
    print(table, end="")
    if args.csv:
        _write(args.csv, table)
    if args.out:
        _write(args.out, _dump({"manifest": manifest.to_dict(), "result": result}))


def cmd_calibrate(args, manifest):
    from .gates import default_rotary_sweep_max, default_scrp_calibration
    from .heat import calibrate_rotary_amplitude

    device = _load_device(args, paper_device if args.triplet else paper_triplet)
    if args.triplet:
        if len(args.triplet) != 3:
            raise ValidationError("--triplet needs three indices c1,t,c2")
        try:
            device.check_triplet(*[device.index(q) for q in args.triplet])
            device = replace(device.subset(args.triplet), roles={"c1": 0, "t": 1, "c2": 2})
        except (IndexError, KeyError) as exc:
            raise ValidationError(f"qubit index out of range for the device: {exc}") from exc
    manifest.device = device_to_dict(device)
    dt = args.dt * NS
    cal = default_scrp_calibration(device, refine=args.refine, dt=dt)
    sub = device.subset([cal.c1, cal.t, cal.c2])
    local = replace(cal, c1=0, t=1, c2=2)
    sweep_max = args.sweep_max * MHZ if args.sweep_max else default_rotary_sweep_max(cal.half_duration, cal.rise_sigma)
    err = args.target_error * MHZ * 1j
    rng = np.random.default_rng(args.seed)
    res = calibrate_rotary_amplitude(
        sub, lambda a: local.schedule(sub, target_error=err, rotary_amp=a), sweep_max,
        mode=args.mode, points=args.points, dt=dt, shots=args.shots, rng=rng,
    )
    cal = replace(cal, rotary_amp=res.best_amplitude)
    out = {"calibration": cal.to_dict(), "rotary": res.to_dict(), "units": "rad/s amplitudes, seconds"}
    _write(args.out, _dump({"manifest": manifest.to_dict(), "result": out}))
    if args.csv:
        rows = [(float(a) / MHZ, float(c)) for a, c in res.cost_curve]
        _write(args.csv, _csv(["rotary_amplitude_mhz", "cost"], rows))


def _irb_executor(args):
    from .clifford_rb import DampingExecutor, DepolarizingExecutor, IdealExecutor

    if args.noise == "ideal":
        return IdealExecutor()
    if args.noise == "depolarizing":
        return DepolarizingExecutor(args.p)
    device = _load_device(args, paper_triplet)
    return DampingExecutor([q.t1 for q in device.transmons[:3]], [q.t2 for q in device.transmons[:3]])


def cmd_irb(args, manifest):
    from .clifford_rb import build_irb_circuits, interleave_circuit, run_rb

    lengths = _int_list(args.lengths)
    inter = None if args.interleave == "none" else interleave_circuit(args.interleave)
    circuits = build_irb_circuits(lengths, args.samples, inter, rng_seed=args.seed)
    shots = None if args.shots == 0 else args.shots
    map_fn, pool = _map_fn(args)
    try:
        res = run_rb(circuits, _irb_executor(args), shots, seed=args.seed, map_fn=map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    _write(args.out, _dump({"manifest": manifest.to_dict(), "result": res.to_dict()}))
    if args.csv:
        _write(args.csv, _csv(["stream", "length", "mean_survival", "std_survival"], res.survival_rows()))


def cmd_parity(args, manifest):
    from .qec_experiments import ErrorReport, NoiseModel, error_statistics, run_parity_experiment

    device = _load_device(args, paper_device)
    manifest.device = device_to_dict(device)
    if device.n != 7:
        raise ValidationError("parity experiment needs a seven-qubit device (D1, F1, D2, S, D3, F2, D4)")
    noise = NoiseModel.from_device(device)
    shots = None if args.shots == 0 else args.shots
    map_fn, pool = _map_fn(args)
    try:
        sc, outcomes = run_parity_experiment(args.impl, noise, args.dd == "on", shots, args.seed, map_fn=map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    report = error_statistics(outcomes)
    result = {
        "impl": args.impl, "dd": args.dd, "total_duration_ns": sc.total / NS,
        "report": report.to_dict(),
        "counts": {o.input_label: o.counts for o in outcomes},
    }
    _write(args.out, _dump({"manifest": manifest.to_dict(), "result": result}))
    if args.csv:
        _write(args.csv, _csv(["impl", "dd", *ErrorReport.COLUMNS], [[args.impl, args.dd, *report.row()]]))


def cmd_optimize(args, manifest):
    from .optimizer import optimize
    from .qec_experiments import PAPER_DURATIONS

    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.input}: {exc}") from exc
    circ = Circuit.from_json(text)
    rep = optimize(circ, PAPER_DURATIONS, verify=not args.no_verify)
    _write(args.output, rep.after.to_json() + "\n")
    if args.report:
        _write(args.report, _dump({"manifest": manifest.to_dict(), "result": rep.to_dict()}))


def cmd_dump_schedule(args, manifest):
    from .gates import default_scrp_calibration
    from .schedules import build_cw_schedule, build_ecr_schedule

    device = _load_device(args, paper_triplet)
    if args.kind == "scrp":
        cal = default_scrp_calibration(device)
        sched = cal.schedule(device, dressing=args.dressing)
    elif args.kind == "ecr":
        cal = default_scrp_calibration(device)
        sched = build_ecr_schedule(device, cal.c1, cal.t, cal.cr_amp1, 0.0, cal.half_duration, cal.rise_sigma)
    else:
        sched = build_cw_schedule(device, [args.amp * MHZ, 0.0, args.amp * MHZ], 1, args.duration * NS, 10 * NS)
    _write(args.out, sched.to_json() + "\n")


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers, got {text!r}") from exc
    if not vals or any(v < 1 for v in vals):
        raise ValidationError("lengths must be positive integers")
    return vals


def _index_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated indices, got {text!r}") from exc
    if not vals or any(v < 0 for v in vals):
        raise ValidationError("indices must be non-negative integers")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from exc


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--device", help=f"device JSON file (default: ${DEVICE_ENV} or the built-in device)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")

    p = _Parser(prog="scrp", description="Simultaneous cross-resonance parity gate toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("coherence-limit", parents=[common], help="coherence-limited average gate error")
    s.add_argument("--duration", "--gate-length", dest="duration", type=float, default=704.0, help="gate length in ns")
    s.add_argument("--qubits", type=_index_list, default=None, help="use T1/T2 of these device qubits, e.g. 1,3,5")
    s.add_argument("--t1", type=_float_list, default=list(PAPER_T1_US), help="T1 list in us")
    s.add_argument("--t2", type=_float_list, default=list(PAPER_T2_US), help="T2 list in us")
    s.add_argument("--out")
    s.set_defaults(func=cmd_coherence_limit)

    s = sub.add_parser("rates", parents=[common], help="effective ZXI / IXZ / ZZ rates")
    s.add_argument("--omega-c1", type=float, default=10.0, help="MHz")
    s.add_argument("--omega-c2", type=float, default=10.0, help="MHz")
    s.add_argument("--perturbative-only", action="store_true", help="skip the pulse simulation")
    s.add_argument("--csv")
    s.add_argument("--dt", type=float, default=0.01, help="integrator step in ns")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("calibrate", parents=[common], help="CR amplitudes and rotary sweep")
    s.add_argument("--triplet", type=_index_list, default=None, help="c1,t,c2 indices in the device")
    s.add_argument("--mode", choices=["fast", "heat"], default="fast")
    s.add_argument("--points", type=int, default=50)
    s.add_argument("--sweep-max", type=float, default=None, help="MHz")
    s.add_argument("--target-error", type=float, default=0.0, help="injected target Y drive, MHz")
    s.add_argument("--refine", action="store_true")
    s.add_argument("--shots", type=int, default=None)
    s.add_argument("--dt", type=float, default=0.02, help="integrator step in ns")
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("irb", parents=[common], help="interleaved randomized benchmarking")
    s.add_argument("--lengths", default="2,3,4,5,7,9,12,17,25,38")
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--shots", type=int, default=400, help="0 for exact probabilities")
    s.add_argument("--interleave", choices=["twocx", "scrp", "identity", "none"], default="none")
    s.add_argument("--noise", choices=["ideal", "depolarizing", "damping"], default="ideal")
    s.add_argument("--p", type=float, default=0.01, help="depolarizing strength")
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_irb)

    s = sub.add_parser("parity-exp", parents=[common], help="heavy-hex X-parity check simulation")
    s.add_argument("--impl", choices=["twocx", "scrp"], default="scrp")
    s.add_argument("--dd", choices=["on", "off"], default="off")
    s.add_argument("--shots", type=int, default=40000, help="0 for exact probabilities")
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_parity)

    s = sub.add_parser("optimize", parents=[common], help="rewrite SWAP chains and CX pairs")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", dest="output")
    s.add_argument("--report")
    s.add_argument("--no-verify", action="store_true")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("dump-schedule", parents=[common], help="write a pulse schedule as JSON")
    s.add_argument("--kind", choices=["scrp", "ecr", "cw"], default="scrp")
    s.add_argument("--dressing", action="store_true")
    s.add_argument("--amp", type=float, default=10.0, help="CW amplitude, MHz")
    s.add_argument("--duration", type=float, default=200.0, help="CW duration, ns")
    s.add_argument("--out")
    s.set_defaults(func=cmd_dump_schedule)
    return p


def _numerical_errors() -> tuple[type[BaseException], ...]:
    from .clifford_rb import RBFitError
    from .effective_rates import BranchAmbiguityError, LeakageError
    from .heat import CalibrationError
    from .qec_experiments import TraceDriftError
    from .schedules import UnitarityDriftError

    return (UnitarityDriftError, LeakageError, BranchAmbiguityError, CalibrationError, RBFitError,
            TraceDriftError, FloatingPointError, np.linalg.LinAlgError)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads")}
    manifest = RunManifest(args.command, config, args.seed, _version())
    numerical = _numerical_errors()
    try:
        args.func(args, manifest)
    except numerical as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DeviceConfigError, CircuitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
