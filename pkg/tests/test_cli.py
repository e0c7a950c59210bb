import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from optolie import scenarios as S
from optolie.cli import main


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("fig1", "fig2", "fig7", "fig9"):
        assert name in out


def test_fig1_peak(tmp_path):
    assert main(["run", "fig1", "--out-dir", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "fig1_g0=0.6_phonon_mean.csv")
    assert header == ["t", "value_analytic", "value_oracle"]
    a = np.array([float(r[1]) for r in rows])
    o = np.array([float(r[2]) for r in rows])
    assert a.max() == pytest.approx(7.84, abs=1e-10)
    assert o.max() == pytest.approx(7.84, abs=1e-6)
    for g0 in ("0.1", "0.3"):
        assert (tmp_path / f"fig1_g0={g0}_X_mean.csv").exists()


def test_csv_round_trip_precision(tmp_path):
    main(["run", "fig1", "--route", "analytic", "--out-dir", str(tmp_path)])
    _, rows = read_csv(tmp_path / "fig1_g0=0.3_phonon_mean.csv")
    assert rows[0][2] == ""  # oracle column blank
    v = rows[37][1]
    assert float("%.17g" % float(v)) == float(v) and "," not in v


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "fig8", "--samples", "101", "--out-dir", str(d)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_empty_labels(tmp_path):
    assert main(["run", "fig1", "--labels", "", "--out-dir", str(tmp_path)]) == 0
    assert list(tmp_path.iterdir()) == []


def test_empty_sweep(tmp_path):
    assert main(["sweep", "fig2", "--axis", "g1", "--values", "",
                 "--out-dir", str(tmp_path)]) == 0
    assert list(tmp_path.iterdir()) == []


def test_single_value_sweep_equals_run(tmp_path):
    sc = S.BUILTINS["fig5a"]
    r1 = S.sweep(sc, "g1", [0.04])[0]
    r2 = S.run_one(sc.with_value("g1", 0.04), None)
    for k in sc.outputs:
        assert np.array_equal(r1.analytic[k].values, r2.analytic[k].values)
        assert np.array_equal(r1.oracle[k].values, r2.oracle[k].values)


def test_bad_axis_and_values(tmp_path):
    assert main(["sweep", "fig2", "--axis", "colour", "--values", "1",
                 "--out-dir", str(tmp_path)]) == 2
    assert main(["sweep", "fig2", "--axis", "g1", "--values", "abc",
                 "--out-dir", str(tmp_path)]) == 2


def test_unknown_scenario_and_bad_args(tmp_path):
    assert main(["run", "fig99", "--out-dir", str(tmp_path)]) == 2
    assert main(["run", "fig1", "--dims", "8", "--out-dir", str(tmp_path)]) == 2
    assert main(["frobnicate"]) == 2


def test_tolerance_failure_exit(tmp_path, capsys):
    assert main(["run", "fig1", "--tol", "1e-15", "--out-dir", str(tmp_path)]) == 4
    assert "FAIL" in capsys.readouterr().out


def test_numerical_failure_exit(tmp_path):
    cfg = tmp_path / "res.toml"
    cfg.write_text('base = "fig7"\n[params]\nomega_d = 10.01\n[time]\nt_end = 1.0\n'
                   'samples = 11\n')
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 3


def test_toml_config(tmp_path):
    cfg = tmp_path / "mine.toml"
    cfg.write_text(
        'description = "linear coupling, short run"\n'
        "[params]\nomega_c = 10.0\nomega_m = 1.0\ng0 = 0.6\n"
        '[initial]\nfield = "number"\nn = 4\nGamma = 2.0\n'
        "[time]\nt_end = 3.141592653589793\nsamples = 3\n"
        '[output]\nlabels = ["phonon_mean"]\nroute = "analytic"\n')
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "mine_phonon_mean.csv")
    assert float(rows[-1][1]) == pytest.approx(7.84, abs=1e-12)


@pytest.mark.parametrize("text", [
    "[params]\ng0 = 0.1\n",                       # missing [initial]
    '[params]\nwarp = 1\n[initial]\nn = 1\n',     # unknown parameter
    'base = "fig1"\n[output]\nlabels = ["entropy"]\n',
    'base = "fig1"\n[time]\nt_end = -1\n',
    "not toml = = 1\n",
])
def test_bad_config(tmp_path, text):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(text)
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_builtins_expressible_as_config():
    for name, sc in S.BUILTINS.items():
        d = {"name": name, "params": {k: getattr(sc.params, k) for k in S.PARAM_AXES}}
        kind, v = sc.field_state
        d["initial"] = ({"field": "number", "n": v} if kind == "number"
                        else {"field": "coherent", "alpha": [v.real, v.imag]})
        d["initial"]["Gamma"] = [sc.Gamma.real, sc.Gamma.imag]
        d["time"] = {"t_end": sc.t_end, "samples": sc.samples}
        d["output"] = {"labels": list(sc.outputs), "route": sc.route}
        if sc.dims:
            d["oracle"] = {"dims": list(sc.dims)}
        d["compare"] = {"tol_kind": sc.tol.kind, "tol": sc.tol.value}
        if sc.compare_until is not None:
            d["compare"]["until"] = sc.compare_until
        if sc.window is not None:
            d["compare"]["window"] = sc.window
        if sc.sweep:
            d["sweep"] = {"axis": sc.sweep[0], "values": list(sc.sweep[1])}
        if sc.wigner_times:
            d["wigner"] = {"times": list(sc.wigner_times)}
        d["description"] = sc.description
        assert S.scenario_from_dict(d) == sc


def test_fig7_parameters():
    p = S.BUILTINS["fig7"].params
    assert (p.omega_c, p.omega_m, p.g0, p.g1) == (10.0, 1.0, 0.1, 0.01)
    assert p.Omega == 0.25 * p.omega_m and p.omega_d == 0.25 * p.omega_c
    sc = S.BUILTINS["fig7"]
    assert sc.field_state == ("coherent", 2.0) and sc.Gamma == 2.0


def test_fig2_sweep_quadrature_frequencies(capsys, tmp_path):
    assert main(["run", "fig2", "--route", "analytic", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    res = S.run(replace(S.BUILTINS["fig2"], route="analytic"))
    got = {r.tag: r.frequencies["X_mean"] for r in res}
    assert "X_mean dominant frequency" in out
    expected = {"g1=0.01": 1.08, "g1=0.04": 1.32, "g1=0.09": 1.72}
    bad = {k: (got[k], v) for k, v in expected.items() if abs(got[k] / v - 1) > 0.01}
    assert not bad, f"measured vs formula: {bad}"


def test_wigner_command(tmp_path, capsys):
    assert main(["wigner", "fig9", "--times", "0,6.283185307179586", "--points", "61",
                 "--out-dir", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "fig9_wigner_summary.csv")
    assert header == ["t", "subsystem", "min", "max", "integral"]
    assert len(rows) == 4
    for r in rows:
        assert abs(float(r[4]) - 1) <= 2e-2
    mech0 = [r for r in rows if r[0] == "0" and r[1] == "mech"][0]
    assert float(mech0[2]) >= -1e-9
    h, grid = read_csv(tmp_path / "fig9_wigner_mech_t=0.csv")
    assert h == ["x", "p", "W"] and len(grid) == 61 * 61
    vals = np.array([[float(v) for v in r] for r in grid])
    i = np.argmax(vals[:, 2])
    assert abs(vals[i, 0] - 2 * math.sqrt(2)) <= 0.2 and abs(vals[i, 1]) <= 0.2


def test_wigner_time_outside_span(tmp_path):
    assert main(["wigner", "fig9", "--times", "1e4", "--out-dir", str(tmp_path)]) == 2


def test_converge_command(capsys, tmp_path):
    assert main(["converge", "fig1", "--dims", "8,16", "--samples", "41", "--t-end", "3.2",
                 "--max-dim", "128", "--out-dir", str(tmp_path)]) == 0
    assert "converged at dims" in capsys.readouterr().out
    assert main(["converge", "fig1", "--dims", "8,8", "--samples", "11",
                 "--max-dim", "16", "--out-dir", str(tmp_path)]) == 3


def test_scenario_validation():
    sc = S.BUILTINS["fig1"]
    with pytest.raises(S.ScenarioError):
        S.Scenario("bad name", sc.params, ("number", 4), 2.0, 1.0)
    with pytest.raises(S.ScenarioError):
        S.Scenario("x", sc.params, ("number", 1.5), 2.0, 1.0)
    with pytest.raises(S.ScenarioError):
        S.Scenario("x", sc.params, ("number", 1), 2.0, 1.0, wigner_times=(2.0,))
    with pytest.raises(S.ScenarioError):
        sc.with_value("n", 3).with_value("alpha", 1.0).with_value("n", 2)
