import math
from dataclasses import replace

import numpy as np
import pytest

from celsim import SystemParams, derive, spectral
from celsim.sweep_io import (COLUMNS, PRESETS, CurveRecord, SweepSpec, curves, preset,
                             read_records, records_equal, run_sweep, write_records)


def test_fig1_preset():
    spec = preset("fig1")
    b = spec.base
    assert (b.kappa, b.gamma, b.Gamma, b.theta, b.Omega) == (0.5, 1.0, 1.0, 0.0, 0.5)
    assert spec.axis == "A" and spec.values == (5.0, 10.0, 15.0)
    assert len(spec.t_grid) == 512 and spec.t_grid[0] == 0.0 and spec.t_grid[-1] == 5.0
    assert "A values" in spec.meta["assumed"]
    assert spec.plotted == "dc_minus_sq"


def test_fig9_preset():
    spec = preset("fig9")
    assert spec.t_grid == (0.85,)
    assert spec.meta["fixed_t"] == 0.85
    assert spec.axis == "gamma_over_Gamma"
    assert (spec.base.A, spec.base.Omega) == (10.0, 10.0)
    assert [p.gamma / p.Gamma for p in spec.points()] == [1.0, 1.5, 2.0]
    assert "theta" in spec.meta["assumed"]


@pytest.mark.parametrize("name", PRESETS)
def test_every_preset_builds(name):
    spec = preset(name)
    assert len(spec.points()) == 3
    assert spec.plotted in ("dc_minus_sq", "nbar")


def test_unknown_preset():
    with pytest.raises(ValueError, match="fig13"):
        preset("fig13")


def test_spec_validation():
    base = SystemParams(A=1, kappa=0.5, Omega=0.5)
    with pytest.raises(ValueError):
        SweepSpec(base, "A", ())
    with pytest.raises(ValueError):
        SweepSpec(base, "temperature", (1.0,))
    with pytest.raises(ValueError):
        SweepSpec(base, "A", (1.0,), engine="monte_carlo")
    with pytest.raises(ValueError):
        SweepSpec(base, "A", (1.0,), observables=("entropy",))
    with pytest.raises(ValueError):
        SweepSpec(base, "A", (1.0,), t_grid=(1.0, 0.5))
    with pytest.raises(ValueError):
        SweepSpec(base, "gamma", (0.0,))


def test_ordering_and_flags():
    records = run_sweep(preset("fig1"))
    assert len(records) == 3 * 512
    assert [r.A for r in records[::512]] == [5.0, 10.0, 15.0]
    assert all(records[i].t < records[i + 1].t for i in range(511))
    assert [r.unstable for r in records[::512]] == [False, True, True]
    assert all(r.error == "" and not r.cutoff_limited for r in records)


def test_dip_then_rise_fig1():
    for rows in curves(run_sweep(preset("fig1"))).values():
        y = np.array([r.dc_minus_sq for r in rows])
        i = int(np.argmin(y))
        assert y[i] < 1.0 and rows[i].t > 0 and y[-1] > y[i]


def test_fig10_nbar_nondecreasing():
    for rows in curves(run_sweep(preset("fig10"))).values():
        assert np.all(np.diff([r.nbar for r in rows]) >= 0)


def test_no_gain_point_is_vacuum():
    spec = SweepSpec(SystemParams(A=0, kappa=0.5, Omega=0.5), "A", (0.0,))
    for r in run_sweep(spec):
        assert (r.dc_minus_sq, r.dc_plus_sq, r.nbar) == (1.0, 1.0, 0.0)


def test_engine_agreement_on_stable_points():
    for name in PRESETS:
        spec = preset(name)
        closed = run_sweep(spec)
        ode = run_sweep(replace(spec, engine="moment_ode"))
        for a, b in zip(closed, ode):
            if a.unstable:
                continue
            for key in ("u", "v", "w", "dc_minus_sq", "nbar"):
                assert getattr(b, key) == pytest.approx(getattr(a, key), rel=1e-6, abs=0)


def test_fock_engine_row():
    spec = SweepSpec(SystemParams(A=2, kappa=0.5, Omega=0.5), "A", (2.0,),
                     t_grid=(0.0, 0.5), engine="fock_oracle")
    r = run_sweep(spec)[-1]
    assert r.engine == "fock_oracle" and not r.cutoff_limited
    assert r.dc_minus_sq == pytest.approx(0.8179703038, abs=1e-6)


def test_errors_are_recorded_per_point():
    # the ODE step guard trips for the large-A point only
    spec = SweepSpec(SystemParams(A=1, kappa=0.5, Omega=0.5), "A", (1.0, 500.0),
                     t_grid=(0.0, 1.0), engine="moment_ode", dt=1e-3)
    records = run_sweep(spec)
    assert [r.error for r in records[:2]] == ["", ""]
    assert records[2].error.startswith("StepTooLarge")
    assert math.isnan(records[3].u) and records[3].A == 500.0


def test_parallel_matches_serial():
    spec = preset("fig6", t_grid=np.linspace(0, 5, 64))
    serial, parallel = run_sweep(spec), run_sweep(spec, workers=3)
    assert all(records_equal(a, b) for a, b in zip(serial, parallel))


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(tmp_path, fmt):
    records = run_sweep(preset("fig2", t_grid=np.linspace(0, 5, 33)))
    records.append(CurveRecord(preset="x", engine="moment_ode", A=1.0, kappa=0.5, Omega=0.1,
                               gamma=1.0, Gamma_=1.0, theta=0.0, t=0.1, error="StepTooLarge: x"))
    path = tmp_path / f"out.{fmt}"
    assert write_records(records, path) == fmt
    back = read_records(path)
    assert len(back) == len(records)
    assert all(records_equal(a, b) for a, b in zip(records, back))


def test_csv_schema(tmp_path):
    path = tmp_path / "fig9.csv"
    write_records(run_sweep(preset("fig9")), path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(COLUMNS)
    assert len(lines) == 4
    first = dict(zip(COLUMNS, lines[1].split(",")))
    assert first["t"] == "0.84999999999999998"
    assert first["unstable"] in ("0", "1")


def test_write_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records(run_sweep(preset("fig4")), a)
    write_records(run_sweep(preset("fig4")), b)
    assert a.read_bytes() == b.read_bytes()


def test_records_equal_sees_last_bit():
    r = run_sweep(preset("fig9"))[0]
    s = replace(r, u=np.nextafter(r.u, 2.0))
    assert records_equal(r, r) and not records_equal(r, s)


def test_params_round_trip():
    r = run_sweep(preset("fig8", t_grid=(1.0,)))[2]
    p = r.params
    assert p.gamma / p.Gamma == 2.0
    assert spectral(derive(p), p).unstable == r.unstable
