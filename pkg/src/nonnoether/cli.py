"""Command-line entry point.

    nonnoether verify FILE [--report text|json] [--points N] [--seed S] [--tol T]
    nonnoether demo toda [--report text|json] ...
    nonnoether flow FILE [--z0 Z0] [--T T] [--dt DT] [--dump csv]

Exit status: 0 when every check passes, 1 when any check fails, 2 on input
errors.  Set NO_COLOR to suppress ANSI colours in text reports.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import flow as flw
from .expr import ExprError
from .lax import build_lax, lax_traces
from .report import render, run
from .symcheck import conserved_quantities
from .sysdef import DEMOS, DefinitionError, SystemDefinition, load

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _use_color(stream) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _add_sampling(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", choices=("text", "json"), default="text")
    p.add_argument("--points", type=int, help="number of sample points (default 100)")
    p.add_argument("--seed", type=int, help="sampling seed (default 42)")
    p.add_argument("--tol", type=float, help="zero-test tolerance (default 1e-9)")
    p.add_argument("--timing", action="store_true", help="include per-check timings (report no longer byte-stable)")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonnoether", description="Verify structures generated by a non-Noether symmetry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the checks listed in a system file")
    p.add_argument("file")
    _add_sampling(p)

    p = sub.add_parser("demo", help="run a built-in example")
    p.add_argument("name", choices=sorted(DEMOS))
    _add_sampling(p)

    p = sub.add_parser("flow", help="integrate Hamilton's equations and report drifts")
    p.add_argument("file")
    p.add_argument("--z0", type=_floats, help="initial point, comma separated")
    p.add_argument("--T", type=float, dest="T", help="duration")
    p.add_argument("--dt", type=float, help="step size")
    p.add_argument("--dump", choices=("csv",), help="write the trajectory to stdout")
    return parser


def _report(defn: SystemDefinition, args, out) -> int:
    defn = defn.with_sampling(count=args.points, seed=args.seed, tol=args.tol)
    report = run(defn, timing=args.timing)
    out.write(render(report, args.report, color=args.report == "text" and _use_color(out)))
    return EXIT_OK if report.ok else EXIT_FAIL


def _flow(defn: SystemDefinition, args, out, err) -> int:
    fc = defn.flow
    z0 = args.z0 if args.z0 is not None else fc.z0
    T = args.T if args.T is not None else fc.T
    dt = args.dt if args.dt is not None else fc.dt
    if z0 is None:
        raise DefinitionError("no initial point: pass --z0 or set flow.z0")
    sys_ = defn.build()
    if len(z0) != sys_.chart.dim:
        raise DefinitionError(f"--z0 needs {sys_.chart.dim} coordinates")
    if not (T > 0 and dt > 0):
        raise DefinitionError("T and dt must be positive")
    traj = flw.integrate(sys_, z0, T, dt)
    drift = {"h": flw.conservation_drift(traj, sys_.h)}
    try:
        for k, y in enumerate(conserved_quantities(sys_), 1):
            drift[f"Y{k}"] = flw.conservation_drift(traj, y)
        lp = build_lax(sys_)
        for k, d in enumerate(flw.trace_drift(traj, lax_traces(lp, sys_.n)), 1):
            drift[f"TrL^{k}"] = d
        drift["spectrum"] = flw.isospectral_drift(traj, lp)
    except (ExprError, ValueError) as exc:
        err.write(f"note: derived quantities unavailable: {exc}\n")
    summary = out if args.dump is None else err
    summary.write(f"RK4 T={T:g} dt={dt:g} steps={len(traj) - 1}\n")
    for k, v in drift.items():
        summary.write(f"  drift {k}: {v:.3e}\n")
    if args.dump == "csv":
        traj.write_csv(out)
    return EXIT_OK if max(drift.values()) < fc.tol else EXIT_FAIL


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            return _report(DEMOS[args.name](), args, out)
        defn = load(args.file)
        if args.command == "verify":
            return _report(defn, args, out)
        return _flow(defn, args, out, err)
    except (DefinitionError, ExprError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except flw.DivergenceError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
