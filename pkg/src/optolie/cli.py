"""``optolie`` command-line interface.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 comparison
tolerance exceeded.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import scenarios as S
from .compare import Tolerance
from .errors import ConsistencyError, ConvergenceError, IntegrationError, ResonanceError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOL = 0, 2, 3, 4


def _dims(text):
    try:
        f, m = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--dims expects F,M (two integers)")
    return f, m


def _values(text):
    return [v for v in text.split(",") if v.strip()] if text else []


def _common(p):
    p.add_argument("--out-dir", type=Path, default=Path("optolie_out"))
    p.add_argument("--route", choices=S.ROUTES)
    p.add_argument("--dims", type=_dims, help="oracle truncation F,M")
    p.add_argument("--tol", type=float, help="override the comparison tolerance value")
    p.add_argument("--samples", type=int, help="number of time samples")
    p.add_argument("--t-end", type=float, help="final time")
    p.add_argument("--window", type=float,
                   help="moving-average window for windowed comparisons")
    p.add_argument("--labels", help="comma-separated outputs; empty string for none")
    p.add_argument("--jobs", type=int, help="concurrent sweep points")


def _apply(sc: S.Scenario, a) -> S.Scenario:
    kw = {}
    if a.route:
        kw["route"] = a.route
    if a.dims:
        kw["dims"] = a.dims
    if a.tol is not None:
        kw["tol"] = Tolerance(sc.tol.kind, a.tol)
    if a.samples is not None:
        kw["samples"] = a.samples
    if a.t_end is not None:
        kw["t_end"] = a.t_end
    if a.window is not None:
        kw["window"] = a.window
    if a.labels is not None:
        kw["outputs"] = tuple(_values(a.labels))
    return replace(sc, **kw) if kw else sc


def _print_results(results) -> int:
    status = EXIT_OK
    for r in results:
        if r.report is not None:
            print(r.report.format())
            if not r.report.passed:
                status = EXIT_TOL
        elif r.scenario.outputs:
            print(f"scenario {r.scenario.name}{'_' + r.tag if r.tag else ''}: "
                  f"route {r.scenario.route}, no comparison")
        for k, w in r.frequencies.items():
            print(f"  {k} dominant frequency {w:.6f}")
        for f in r.files:
            print(f"  wrote {f}")
    return status


def cmd_list(a):
    w = max(len(n) for n in S.BUILTINS)
    for name, sc in S.BUILTINS.items():
        print(f"{name:<{w}}  {sc.description}")
    return EXIT_OK


def cmd_run(a):
    sc = _apply(S.load_scenario(a.scenario), a)
    status = _print_results(S.run(sc, a.out_dir, a.jobs))
    if sc.wigner_times and sc.route in ("oracle", "both") and not a.no_wigner:
        status = max(status, _print_wigner(S.wigner_snapshots(sc, out_dir=a.out_dir)))
    return status


def cmd_sweep(a):
    sc = _apply(S.load_scenario(a.scenario), a)
    return _print_results(S.sweep(sc, a.axis, _values(a.values), a.out_dir, a.jobs))


def _print_wigner(snaps) -> int:
    status = EXIT_OK
    for tw, sub, W in snaps:
        ok = abs(W.integral - 1) <= 2e-2
        print(f"  wigner t={tw:.6g} {sub:<5s} min {W.min:+.3e} max {W.max:+.3e} "
              f"integral {W.integral:.5f}{'' if ok else '  NORMALIZATION FAIL'}")
        if not ok:
            status = EXIT_TOL
    return status


def cmd_wigner(a):
    sc = _apply(S.load_scenario(a.scenario), a)
    times = [float(v) for v in _values(a.times)] if a.times else None
    axis = np.linspace(-a.extent, a.extent, a.points)
    snaps = S.wigner_snapshots(sc, times, a.out_dir, axis, axis)
    print(f"scenario {sc.name}: {len(snaps)} Wigner grids written to {a.out_dir}")
    return _print_wigner(snaps)


def cmd_converge(a):
    sc = _apply(S.load_scenario(a.scenario), a)
    final, history = S.converge_report(sc, max_dim=a.max_dim)
    print(f"scenario {sc.name}: converged at dims {final.dims}")
    for dims, change in history:
        print(f"  dims {dims}: max change {change:.3e}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="optolie", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-scenarios", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("run", help="run a scenario and compare routes")
    p.add_argument("scenario", help="built-in name or TOML config path")
    p.add_argument("--no-wigner", action="store_true", help="skip Wigner snapshots")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario over values of one parameter")
    p.add_argument("scenario")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated; may be empty")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("wigner", help="Wigner snapshots of both subsystems")
    p.add_argument("scenario")
    p.add_argument("--times", help="comma-separated times (default: the scenario's)")
    p.add_argument("--extent", type=float, default=6.0)
    p.add_argument("--points", type=int, default=201)
    _common(p)
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("converge", help="dim-doubling convergence report")
    p.add_argument("scenario")
    p.add_argument("--max-dim", type=int, default=256)
    _common(p)
    p.set_defaults(func=cmd_converge)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return a.func(a)
    except S.ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, ConvergenceError, ConsistencyError, ResonanceError,
            ZeroDivisionError, FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
