"""Command-line interface.

Subcommands::

    berrycross simulate <scenario.json>
    berrycross sweep <sweep.json> [--output FILE]
    berrycross connection-check <scenario.json>
    berrycross scenario shrink-rotate-return --theta ... --r-small ...

Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, load_scenario, load_sweep
from .connection import connection_analytic, connection_numeric
from .errors import BerryCrossError, ContractError, DomainError
from .evolution import EvolutionConfig, EvolutionResult
from .model import ParameterPath, polar_track
from .phases import BRANCH_NOTE
from .scenarios import SWEEP_COLUMNS, RunReport, run_cycle, shrink_rotate_return_path, sweep_phase_map

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TRAJECTORY_COLUMNS = ("t", "re_upper", "im_upper", "re_lower", "im_lower", "norm",
                      "instantaneous_E_plus", "instantaneous_E_minus")


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _header(args) -> str:
    line = f"# schema={SCHEMA_VERSION}"
    if not args.no_timestamp:
        line += f" generated={_timestamp()}"
    return line + "\n"


def _overrides(args) -> dict:
    return {"rel_tol": args.tolerance, "integrator": args.integrator,
            "record_trajectory": True if args.trajectory else None}


def _report_json(report: RunReport, path: ParameterPath, cfg: EvolutionConfig, args, extra=None) -> str:
    d = report.decomposition
    out = {"schema": SCHEMA_VERSION}
    if not args.no_timestamp:
        out["generated"] = _timestamp()
    out.update(extra or {})
    out.update({
        "total_phase": d.total_phase,
        "dynamical_phase": d.dynamical_phase,
        "geometric_phase": d.geometric_phase,
        "cyclicity_fidelity": d.cyclicity_fidelity,
        "adiabaticity_ratio": d.adiabaticity_ratio,
        "below_fidelity_floor": d.flagged,
        "fidelity_floor": d.fidelity_floor,
        "adiabatic_geometric_phase": report.adiabatic_geometric_phase,
        "transition_probability": report.transition_probability,
        "steps": report.result.steps,
        "norm_drift": report.result.norm_drift,
        "integrator": report.result.integrator,
        "period_T": path.period_T,
        "branch_note": BRANCH_NOTE,
    })
    return json.dumps(out, indent=2, sort_keys=False) + "\n"


def write_trajectory(fh, result: EvolutionResult, path: ParameterPath) -> None:
    traj = result.trajectory
    pt = polar_track(path, traj.t, need_azimuth=False)
    shift = path.energy_offset + path.sample(traj.t)[0]
    gr = path.coupling_g * pt.r
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    norms = np.sqrt(np.sum(np.abs(traj.original) ** 2, axis=1))
    for k, t in enumerate(traj.t):
        u, d = traj.original[k]
        writer.writerow([repr(float(t)), repr(u.real), repr(u.imag), repr(d.real), repr(d.imag),
                         repr(float(norms[k])), repr(float(shift[k] + gr[k])), repr(float(shift[k] - gr[k]))])


def _run_and_print(path, cfg, args, floor, extra=None, out=None) -> int:
    out = out or sys.stdout
    report = run_cycle(path, cfg, fidelity_floor=floor)
    if args.trajectory:
        with open(args.trajectory, "w", newline="") as fh:
            fh.write(_header(args))
            write_trajectory(fh, report.result, path)
    out.write(_report_json(report, path, cfg, args, extra))
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    spec = load_scenario(args.scenario)
    cfg = spec.evolution_config(**_overrides(args))
    return _run_and_print(spec.build_path(), cfg, args, spec.fidelity_floor, {"kind": spec.kind}, out)


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def cmd_sweep(args, out) -> int:
    spec = load_sweep(args.sweep)
    cfg = spec.evolution_config(**{**_overrides(args), "record_trajectory": None})
    threads = args.threads or spec.threads
    records = sweep_phase_map(spec.B0_values, spec.omega_values, spec.base_model(), cfg, threads=threads)
    buf = io.StringIO()
    buf.write(_header(args))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for rec in records:
        row = [getattr(rec, c) for c in SWEEP_COLUMNS]
        if args.no_timestamp:
            row[SWEEP_COLUMNS.index("runtime_ms")] = ""
        writer.writerow([_fmt(v) for v in row])
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    failed = sum(r.status != "ok" for r in records)
    if failed:
        print(f"warning: {failed} of {len(records)} grid points failed", file=sys.stderr)
    return EXIT_OK


def cmd_connection_check(args, out) -> int:
    spec = load_scenario(args.scenario)
    path = spec.build_path()
    n = int(spec.outputs.get("connection_samples", args.samples))
    dt = path.period_T * float(spec.outputs.get("connection_dt_fraction", 1e-5))
    times = (np.arange(n) + 0.5) * path.period_T / n
    pt = polar_track(path, times)
    out.write(_header(args))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("t", "entry", "analytic_re", "analytic_im", "numeric_re", "numeric_im", "abs_error"))
    for k, t in enumerate(times):
        ana = connection_analytic(pt.theta[k], pt.theta_dot[k], pt.phi_dot[k])
        num = connection_numeric(path, float(t), dt)
        for m in "+-":
            for n_ in "+-":
                a, b = ana[m, n_], num[m, n_]
                writer.writerow([repr(float(t)), f"{m}{n_}", repr(a.real), repr(a.imag),
                                 repr(b.real), repr(b.imag), repr(abs(a - b))])
    return EXIT_OK


def cmd_shrink_rotate_return(args, out) -> int:
    split = tuple(float(v) for v in args.split.split(","))
    cfg = EvolutionConfig(hbar=args.hbar, **{k: v for k, v in _overrides(args).items() if v is not None})
    path = shrink_rotate_return_path(args.theta, args.phi, args.r_start, args.r_small, args.T, args.g, split)
    extra = {"kind": "shrink_rotate_return",
             "rotation_action": args.T * split[1] * args.g * args.r_small / args.hbar,
             "solid_angle": 2 * math.pi * (1 - math.cos(args.theta))}
    return _run_and_print(path, cfg, args, args.fidelity_floor, extra, out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None, help="relative tolerance (rel_tol)")
    common.add_argument("--integrator", choices=("midpoint_exponential", "magnus4", "rk_adaptive"), default=None)
    common.add_argument("--trajectory", metavar="PATH", default=None, help="write the state trajectory as CSV")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps for byte-stable output")
    common.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")

    parser = argparse.ArgumentParser(prog="berrycross", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common], help="run one scenario and print its phase decomposition")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="scan a (B0, omega) grid and emit CSV")
    p.add_argument("sweep")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("connection-check", parents=[common], help="analytic vs numeric connection table")
    p.add_argument("scenario")
    p.add_argument("--samples", type=int, default=8)
    p.set_defaults(func=cmd_connection_check)

    p = sub.add_parser("scenario", help="built-in scenarios")
    ssub = p.add_subparsers(dest="scenario_name", required=True, metavar="NAME")
    s = ssub.add_parser("shrink-rotate-return", parents=[common],
                        help="shrink r at fixed angles, rotate phi by 2 pi, grow back")
    s.add_argument("--theta", type=float, default=math.pi / 2)
    s.add_argument("--phi", type=float, default=0.0)
    s.add_argument("--r-start", type=float, default=1.0)
    s.add_argument("--r-small", type=float, required=True)
    s.add_argument("--T", type=float, required=True, help="total duration of the cycle")
    s.add_argument("--g", type=float, default=1.0)
    s.add_argument("--hbar", type=float, default=1.0)
    s.add_argument("--split", default="0.25,0.5,0.25", help="fractions of T for shrink,rotate,return")
    s.add_argument("--fidelity-floor", type=float, default=0.98)
    s.set_defaults(func=cmd_shrink_rotate_return)
    return parser


def run_cli(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (ContractError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BerryCrossError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())
