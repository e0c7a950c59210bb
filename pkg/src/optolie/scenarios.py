"""Named scenarios, config files, and the run/sweep/wigner drivers behind the CLI."""
from __future__ import annotations

import csv
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import oracle as orc
from .compare import ComparisonReport, Tolerance, deviation, dominant_frequency
from .observables import LABELS, ObservableSeries, analytic_series
from .propagators import SystemParams
from .wigner import DEFAULT_AXIS, wigner

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ROUTES = ("analytic", "oracle", "both")
PARAM_AXES = tuple(f.name for f in fields(SystemParams))
STATE_AXES = ("n", "alpha", "Gamma")


class ScenarioError(ValueError):
    """Invalid scenario definition or config file."""


@dataclass(frozen=True)
class Scenario:
    name: str
    params: SystemParams
    field_state: tuple  # ("number", n) | ("coherent", alpha)
    Gamma: complex
    t_end: float
    samples: int = 401
    outputs: tuple = ("phonon_mean",)
    route: str = "both"
    dims: tuple | None = None
    tol: Tolerance = Tolerance("abs", 1e-5)
    compare_until: float | None = None
    window: float | None = None
    sweep: tuple | None = None  # (axis, values)
    wigner_times: tuple = ()
    description: str = ""

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\ "):
            raise ScenarioError(f"invalid scenario name {self.name!r}")
        if self.field_state[0] not in ("number", "coherent"):
            raise ScenarioError(f"unknown field state {self.field_state[0]!r}")
        if self.field_state[0] == "number" and (int(self.field_state[1]) != self.field_state[1]
                                                or self.field_state[1] < 0):
            raise ScenarioError("photon number must be a non-negative integer")
        if not self.t_end > 0:
            raise ScenarioError("t_end must be positive")
        if self.samples < 2:
            raise ScenarioError("samples must be >= 2")
        bad = set(self.outputs) - set(LABELS)
        if bad:
            raise ScenarioError(f"unknown output labels {sorted(bad)}")
        if self.route not in ROUTES:
            raise ScenarioError(f"route must be one of {ROUTES}")
        if self.dims is not None and (len(self.dims) != 2 or min(self.dims) < 4):
            raise ScenarioError("dims must be two integers >= 4")
        if self.sweep is not None:
            check_axis(self.sweep[0])
        for tw in self.wigner_times:
            if not 0 <= tw <= self.t_end:
                raise ScenarioError(f"wigner time {tw} outside [0, {self.t_end}]")

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.samples)

    def oracle_dims(self) -> tuple:
        if self.dims is not None:
            return tuple(self.dims)
        df, dm = orc.default_dims(self.field_state, self.Gamma)
        if self.params.Omega > 0:
            df += 2  # room for the drive displacement
        return df, dm

    def with_value(self, axis: str, value: float) -> "Scenario":
        check_axis(axis)
        if axis in PARAM_AXES:
            return replace(self, params=self.params.with_(**{axis: value}), sweep=None)
        if axis == "n":
            if self.field_state[0] != "number":
                raise ScenarioError("axis 'n' needs a number-state field")
            return replace(self, field_state=("number", int(value)), sweep=None)
        if axis == "alpha":
            return replace(self, field_state=("coherent", complex(value)), sweep=None)
        return replace(self, Gamma=complex(value), sweep=None)


def check_axis(axis: str):
    if axis not in PARAM_AXES + STATE_AXES:
        raise ScenarioError(f"sweep axis {axis!r} is not a numeric scenario parameter; "
                            f"choose from {PARAM_AXES + STATE_AXES}")


def _base(**kw):
    return SystemParams(omega_c=10.0, omega_m=1.0, **kw)


def _builtins() -> dict:
    forced = _base(g0=0.1, g1=0.01, Omega=0.25, omega_d=2.5)
    s = [
        Scenario("fig1", _base(g0=0.6), ("number", 4), 2.0, 4 * math.pi, 401,
                 ("phonon_mean", "X_mean"), dims=(8, 64), sweep=("g0", (0.1, 0.3, 0.6)),
                 description="n=4, Gamma=2, g1=0, g0 in {0.1, 0.3, 0.6}, omega_m=1"),
        Scenario("fig2", _base(g1=0.01), ("number", 4), 2.0, 40 * math.pi, 2001,
                 ("phonon_mean", "X_mean"), dims=(8, 64), sweep=("g1", (0.01, 0.04, 0.09)),
                 description="n=4, Gamma=2, g0=0, g1 in {0.01, 0.04, 0.09}, omega_m=1"),
        Scenario("fig3", _base(g1=0.01), ("coherent", 2.0), 2.0, 40 * math.pi, 1601,
                 ("phonon_mean", "X_mean"), dims=(21, 128), sweep=("g1", (0.01, 0.04, 0.09)),
                 description="alpha=2, Gamma=2, g0=0, g1 in {0.01, 0.04, 0.09}"),
        Scenario("fig4a", _base(g0=0.1, g1=0.01, Omega=0.1, omega_d=1.0), ("number", 4), 2.0,
                 50 * math.pi, 5001, ("photon_mean",), dims=(10, 40),
                 tol=Tolerance("relative", 0.1), compare_until=10 * math.pi, window=TWO_PI,
                 description="omega_c=10, omega_m=0.1 omega_c, g0=0.1, g1=g0^2, "
                             "Omega=0.1 omega_m, omega_d=0.1 omega_c, n0=4"),
        Scenario("fig4b", _base(g0=0.1, g1=0.01, Omega=0.25, omega_d=2.5), ("number", 4), 2.0,
                 50 * math.pi, 5001, ("photon_mean",), dims=(10, 40),
                 tol=Tolerance("relative", 0.1), compare_until=10 * math.pi, window=TWO_PI,
                 description="omega_c=10, omega_m=0.1 omega_c, g0=0.1, g1=g0^2, "
                             "Omega=0.25 omega_m, omega_d=0.25 omega_c, n0=4"),
        Scenario("fig5a", _base(g0=0.3, g1=0.01), ("number", 4), 2.0, 8 * math.pi, 801,
                 ("phonon_mean", "X_mean"), dims=(8, 64), sweep=("g1", (0.01, 0.04, 0.09)),
                 description="n=4, Gamma=2, g0=0.3, g1 in {0.01, 0.04, 0.09}, omega_m=1"),
        Scenario("fig5b", _base(g0=0.1, g1=0.04), ("number", 4), 2.0, 8 * math.pi, 801,
                 ("phonon_mean", "X_mean"), dims=(8, 64), sweep=("g0", (0.1, 0.3, 0.6)),
                 description="n=4, Gamma=2, g1=0.04, g0 in {0.1, 0.3, 0.6}, omega_m=1"),
        Scenario("fig6", _base(g0=0.1, g1=0.01), ("coherent", 2.0), 2.0, 120 * math.pi, 2401,
                 ("phonon_mean", "X_mean"), dims=(21, 48),
                 description="alpha=Gamma=2, omega_c=10, omega_m=0.1 omega_c, g0=0.1, g1=g0^2"),
        Scenario("fig7", forced, ("coherent", 2.0), 2.0, 120 * math.pi, 4801,
                 ("phonon_mean", "X_mean"), dims=(23, 40), tol=Tolerance("range", 0.05),
                 description="alpha=Gamma=2, omega_c=10, omega_m=0.1 omega_c, g0=0.1, g1=g0^2, "
                             "Omega=0.25 omega_m, omega_d=0.25 omega_c"),
        Scenario("fig8", _base(g0=0.1, g1=0.01), ("number", 2), 2.0, 8 * math.pi, 801,
                 ("dX", "dP", "uncertainty_product"), dims=(6, 64),
                 description="n=2, Gamma=2, g0=0.1, g1=0.01, omega_c=10, omega_m=1"),
        Scenario("fig8-coherent", _base(g0=0.1, g1=0.01), ("coherent", 2.0), 2.0, 120 * math.pi,
                 2401, ("dX", "dP"), dims=(21, 48),
                 description="alpha=2, Gamma=2, g0=0.1, g1=0.01, omega_c=10, omega_m=1"),
        Scenario("fig9", forced, ("coherent", 2.0), 2.0, 60 * math.pi, 1201,
                 ("phonon_mean",), dims=(23, 40), tol=Tolerance("range", 0.05),
                 wigner_times=(0.0, 36 * math.pi, 55 * math.pi),
                 description="as fig7; snapshots at t=0, the first collapse and the first revival"),
        Scenario("mandel", _base(g0=0.6, g1=0.01), ("number", 4), 2.0, 8 * math.pi, 801,
                 ("mandel_Q", "phonon_mean"), dims=(8, 64), sweep=("g0", (0.1, 0.3, 0.6)),
                 description="n=4, Gamma=2, g1=0.01, g0 in {0.1, 0.3, 0.6}, omega_m=1"),
        Scenario("mandel-g1zero", _base(g0=0.6), ("number", 4), 2.0, 8 * math.pi, 801,
                 ("mandel_Q", "phonon_mean"), dims=(8, 64), sweep=("g0", (0.1, 0.3, 0.6)),
                 description="n=4, Gamma=2, g1=0, g0 in {0.1, 0.3, 0.6}, omega_m=1"),
    ]
    return {sc.name: sc for sc in s}


BUILTINS = _builtins()


# -- config files -----------------------------------------------------------

def _complex(v, key):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ScenarioError(f"{key} must be a number or [re, im]")


def scenario_from_dict(d: dict) -> Scenario:
    """Build a scenario from parsed config; see docs/config.md for the schema."""
    try:
        base = d.get("base")
        if base is not None:
            if base not in BUILTINS:
                raise ScenarioError(f"unknown base scenario {base!r}")
            sc = BUILTINS[base]
        else:
            sc = None
        p = dict(d.get("params", {}))
        unknown = set(p) - set(PARAM_AXES)
        if unknown:
            raise ScenarioError(f"unknown params {sorted(unknown)}")
        params = (sc.params.with_(**p) if sc else SystemParams(**p))
        init = d.get("initial", {})
        if init:
            kind = init.get("field", "number")
            if kind == "number":
                fs = ("number", int(init["n"]))
            elif kind == "coherent":
                fs = ("coherent", _complex(init["alpha"], "initial.alpha"))
            else:
                raise ScenarioError(f"initial.field must be 'number' or 'coherent', got {kind!r}")
            Gamma = _complex(init.get("Gamma", 0.0), "initial.Gamma")
        elif sc:
            fs, Gamma = sc.field_state, sc.Gamma
        else:
            raise ScenarioError("missing [initial] section")
        tm = d.get("time", {})
        out = d.get("output", {})
        orc_ = d.get("oracle", {})
        cmp_ = d.get("compare", {})
        sw = d.get("sweep")
        wg = d.get("wigner", {})

        def pick(section, key, default):
            return section[key] if key in section else default

        tol = sc.tol if sc else Tolerance()
        if "tol" in cmp_ or "tol_kind" in cmp_:
            tol = Tolerance(pick(cmp_, "tol_kind", tol.kind), float(pick(cmp_, "tol", tol.value)))
        return Scenario(
            name=d.get("name", sc.name if sc else None) or "",
            params=params,
            field_state=fs,
            Gamma=Gamma,
            t_end=float(pick(tm, "t_end", sc.t_end if sc else math.nan)),
            samples=int(pick(tm, "samples", sc.samples if sc else 401)),
            outputs=tuple(pick(out, "labels", sc.outputs if sc else ("phonon_mean",))),
            route=pick(out, "route", sc.route if sc else "both"),
            dims=tuple(orc_["dims"]) if "dims" in orc_ else (sc.dims if sc else None),
            tol=tol,
            compare_until=pick(cmp_, "until", sc.compare_until if sc else None),
            window=pick(cmp_, "window", sc.window if sc else None),
            sweep=((sw["axis"], tuple(float(v) for v in sw["values"])) if sw
                   else (sc.sweep if sc else None)),
            wigner_times=tuple(float(x) for x in pick(wg, "times",
                                                     sc.wigner_times if sc else ())),
            description=d.get("description", sc.description if sc else ""),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario config: {exc}") from exc


def load_scenario(spec: str) -> Scenario:
    """A built-in name or a path to a TOML config file."""
    if spec in BUILTINS:
        return BUILTINS[spec]
    path = Path(spec)
    if not path.is_file():
        raise ScenarioError(f"unknown scenario {spec!r} (not a built-in name or a file)")
    try:
        with open(path, "rb") as fh:
            d = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    d.setdefault("name", path.stem)
    return scenario_from_dict(d)


# -- running ----------------------------------------------------------------

def _fmt(x) -> str:
    return "" if x is None else "%.17g" % x


def write_series_csv(path: Path, t, analytic=None, oracle=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value_analytic", "value_oracle"])
        for i, ti in enumerate(t):
            w.writerow([_fmt(ti),
                        _fmt(None if analytic is None else analytic[i]),
                        _fmt(None if oracle is None else oracle[i])])


def _value_tag(axis, value) -> str:
    # shortest round-trip repr keeps file names readable and unambiguous
    v = complex(value)
    s = repr(v.real) if v.imag == 0 else f"{v.real!r}{v.imag:+}j"
    return f"{axis}={s}"


@dataclass
class RunResult:
    scenario: Scenario
    tag: str
    analytic: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    report: ComparisonReport | None = None
    frequencies: dict = field(default_factory=dict)
    files: list = field(default_factory=list)


def _oracle_series(sc: Scenario, labels) -> dict:
    dims = sc.oracle_dims()
    cfg = orc.SimConfig(dims[0], dims[1], sc.t_grid)
    traj = orc.propagate(orc.initial_state(sc.field_state, sc.Gamma, dims), sc.params, cfg)
    log.info("%s: oracle dims %s, norm drift %.2e", sc.name, dims, traj.norm_drift)
    out = orc.observables_from_state(traj, [k for k in labels])
    if sc.field_state[0] == "coherent" and {"dX", "dP", "uncertainty_product"} & set(labels):
        # the analytic coherent-field dispersions average per photon number
        dX, dP = orc.per_photon_dispersion(traj)
        for k, v in (("dX", dX.values), ("dP", dP.values),
                     ("uncertainty_product", dX.values * dP.values)):
            if k in labels:
                out[k] = ObservableSeries(sc.t_grid, v, k, "oracle")
    return out


def run_one(sc: Scenario, out_dir: Path | None, tag: str = "") -> RunResult:
    """Run a single parameter point; writes one CSV per output label."""
    t = sc.t_grid
    res = RunResult(sc, tag)
    labels = tuple(sc.outputs)
    if not labels:
        return res
    if sc.route in ("analytic", "both"):
        res.analytic = analytic_series(sc.params, sc.field_state, sc.Gamma, t, labels)
    if sc.route in ("oracle", "both"):
        res.oracle = _oracle_series(sc, labels)
    stem = sc.name + (f"_{tag}" if tag else "")
    if out_dir is not None:
        for k in labels:
            a = res.analytic.get(k)
            o = res.oracle.get(k)
            path = out_dir / f"{stem}_{k}.csv"
            write_series_csv(path, t, a.values if a else None, o.values if o else None)
            res.files.append(path)
    for k in labels:
        src = res.analytic.get(k) or res.oracle.get(k)
        if k in ("phonon_mean", "X_mean") and np.ptp(src.values) > 1e-9:
            try:
                res.frequencies[k] = dominant_frequency(t, src.values)
            except ValueError:
                pass
    if sc.route == "both":
        entries = []
        for k in labels:
            a, o = res.analytic[k], res.oracle[k]
            if sc.window:
                a = orc.moving_average(a, sc.window)
                o = orc.moving_average(o, sc.window)
                if out_dir is not None:
                    path = out_dir / f"{stem}_{k}_movavg.csv"
                    write_series_csv(path, t, a.values, o.values)
                    res.files.append(path)
            entries.append(deviation(k, a, o, sc.tol, sc.compare_until))
        res.report = ComparisonReport(stem, tuple(entries))
    return res


def run(sc: Scenario, out_dir: Path | None = None, jobs: int | None = None) -> list:
    """Run a scenario, expanding its built-in sweep if it has one."""
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if sc.sweep is None:
        return [run_one(sc, out_dir)]
    return sweep(sc, sc.sweep[0], sc.sweep[1], out_dir, jobs)


def sweep(sc: Scenario, axis: str, values, out_dir: Path | None = None,
          jobs: int | None = None) -> list:
    check_axis(axis)
    vals = []
    for v in values:
        try:
            vals.append(complex(v) if axis in ("alpha", "Gamma") else float(v))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"sweep value {v!r} is not numeric") from exc
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    points = [(sc.with_value(axis, v), _value_tag(axis, v)) for v in vals]
    if not points:
        return []
    jobs = jobs or min(len(points), os.cpu_count() or 1)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(lambda p: run_one(p[0], out_dir, p[1]), points))
    return [run_one(p, out_dir, tag) for p, tag in points]


def wigner_snapshots(sc: Scenario, times=None, out_dir: Path | None = None,
                     x_axis=DEFAULT_AXIS, p_axis=DEFAULT_AXIS) -> list:
    """Oracle Wigner grids of both reduced states at the requested times.

    Returns ``(time, subsystem, WignerGrid)`` tuples and writes one long-form
    CSV per grid plus a summary CSV with min, max and integral.
    """
    times = tuple(sc.wigner_times if times is None else times)
    for tw in times:
        if not 0 <= tw <= sc.t_end:
            raise ScenarioError(f"wigner time {tw} outside [0, {sc.t_end}]")
    if not times:
        return []
    grid = np.unique(np.concatenate([[0.0], np.asarray(times, float)]))
    dims = sc.oracle_dims()
    cfg = orc.SimConfig(dims[0], dims[1], grid)
    traj = orc.propagate(orc.initial_state(sc.field_state, sc.Gamma, dims), sc.params, cfg)
    out = []
    for tw in times:
        i = int(np.searchsorted(grid, tw))
        for sub in ("mech", "field"):
            W = wigner(traj.reduced(i, sub), x_axis, p_axis)
            out.append((tw, sub, W))
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / f"{sc.name}_wigner_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "subsystem", "min", "max", "integral"])
            for tw, sub, W in out:
                w.writerow([_fmt(tw), sub, _fmt(W.min), _fmt(W.max), _fmt(W.integral)])
        for tw, sub, W in out:
            with open(out_dir / f"{sc.name}_wigner_{sub}_t={_fmt(tw)}.csv", "w",
                      newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "p", "W"])
                for ip, pv in enumerate(W.p_axis):
                    for jx, xv in enumerate(W.x_axis):
                        w.writerow([_fmt(xv), _fmt(pv), _fmt(W.values[ip, jx])])
    return out


def converge_report(sc: Scenario, which=None, max_dim: int = 256):
    """Dim-doubling study on the mechanical truncation."""
    which = tuple(which or [k for k in sc.outputs if k in LABELS])
    dims = sc.oracle_dims()
    cfg = orc.SimConfig(dims[0], dims[1], sc.t_grid, max_dim=max_dim)
    return orc.converge(sc.field_state, sc.Gamma, sc.params, cfg, which=which)
