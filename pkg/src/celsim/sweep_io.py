"""Figure presets, one-axis parameter sweeps and curve-file I/O."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import closed_form, fock_oracle, moment_ode
from .errors import CelsimError
from .params import SystemParams, derive, drift_diffusion, gamma_ratio_params

ENGINES = ("closed_form", "moment_ode", "fock_oracle")
OBSERVABLES = ("dc_minus_sq", "dc_plus_sq", "nbar", "u", "v", "w")
AXES = ("A", "kappa", "Omega", "gamma", "Gamma", "theta", "gamma_over_Gamma")
DEFAULT_T_GRID = np.linspace(0.0, 5.0, 512)
DEFAULT_ODE_DT = 1e-4
DEFAULT_FOCK_DT = 1e-3

DEFAULT_VALUES = {
    "A": (5.0, 10.0, 15.0),
    "theta": (0.0, 0.5, 1.0),
    "gamma_over_Gamma": (1.0, 1.5, 2.0),
}

COLUMNS = ("preset", "engine", "A", "kappa", "Omega", "gamma", "Gamma_", "theta", "t",
           "dc_minus_sq", "dc_plus_sq", "nbar", "u", "v", "w",
           "unstable", "degenerate", "cutoff_limited", "error")


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    axis: str
    values: tuple
    t_grid: tuple = tuple(DEFAULT_T_GRID)
    observables: tuple = OBSERVABLES
    engine: str = "closed_form"
    name: str = "custom"
    plotted: str = "dc_minus_sq"
    dt: float | None = None
    cutoffs: tuple = fock_oracle.DEFAULT_CUTOFFS
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; expected one of {AXES}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        if not self.values:
            raise ValueError("values must be non-empty")
        bad = set(self.observables) - set(OBSERVABLES)
        if bad:
            raise ValueError(f"unknown observables {sorted(bad)}")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be nonnegative and strictly increasing")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "t_grid", tuple(float(x) for x in t))
        for v in self.values:
            point_params(self.base, self.axis, v)

    def points(self) -> list[SystemParams]:
        return [point_params(self.base, self.axis, v) for v in self.values]


@dataclass
class CurveRecord:
    preset: str
    engine: str
    A: float
    kappa: float
    Omega: float
    gamma: float
    Gamma_: float
    theta: float
    t: float
    dc_minus_sq: float = math.nan
    dc_plus_sq: float = math.nan
    nbar: float = math.nan
    u: float = math.nan
    v: float = math.nan
    w: float = math.nan
    unstable: bool = False
    degenerate: bool = False
    cutoff_limited: bool = False
    error: str = ""

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.A, self.kappa, self.Omega, self.gamma, self.Gamma_, self.theta)


def point_params(base: SystemParams, axis: str, value: float) -> SystemParams:
    if axis == "gamma_over_Gamma":
        return gamma_ratio_params(base, value)
    return base.replace(**{axis: value})


_FIGURES = {
    # name: (plotted, fixed overrides on gamma = Gamma = 1, kappa = 0.5, axis, fixed time)
    "fig1": ("dc_minus_sq", dict(theta=0.0, Omega=0.5), "A", None),
    "fig2": ("dc_minus_sq", dict(theta=0.0, Omega=10.0), "A", None),
    "fig3": ("dc_minus_sq", dict(theta=0.0, Omega=2.5), "A", None),
    "fig4": ("dc_minus_sq", dict(A=10.0, Omega=0.5), "theta", None),
    "fig5": ("dc_minus_sq", dict(A=10.0, Omega=2.5), "theta", None),
    "fig6": ("dc_minus_sq", dict(A=10.0, Omega=10.0), "theta", None),
    "fig7": ("dc_minus_sq", dict(theta=0.0, A=10.0, Omega=0.5), "gamma_over_Gamma", None),
    "fig8": ("dc_minus_sq", dict(theta=0.0, A=10.0, Omega=10.0), "gamma_over_Gamma", None),
    "fig9": ("dc_minus_sq", dict(A=10.0, Omega=10.0), "gamma_over_Gamma", 0.85),
    "fig10": ("nbar", dict(theta=0.0, Omega=0.5), "A", None),
    "fig11": ("nbar", dict(A=10.0, Omega=10.0), "theta", None),
    "fig12": ("nbar", dict(A=10.0, Omega=10.0), "gamma_over_Gamma", 0.85),
}
PRESETS = tuple(_FIGURES)


def preset(name: str, engine: str = "closed_form", t_grid=None) -> SweepSpec:
    """Parameters of one of the twelve figure presets.

    gamma = 1 sets the unit, so Omega = 10 gamma reads Omega = 10. Swept
    value lists and any parameter the figure does not fix (theta in fig9 and
    fig12) are representative defaults, listed under meta["assumed"].
    """
    try:
        plotted, fixed, axis, t_fixed = _FIGURES[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}") from None
    values = dict(A=10.0, kappa=0.5, Omega=0.0, gamma=1.0, Gamma=1.0, theta=0.0)
    values.update(fixed)
    base = SystemParams(**values)
    assumed = [f"{axis} values"]
    if "theta" not in fixed and axis != "theta":
        assumed.append("theta")
    if t_grid is None:
        t_grid = (t_fixed,) if t_fixed is not None else tuple(DEFAULT_T_GRID)
    return SweepSpec(base=base, axis=axis, values=DEFAULT_VALUES[axis], t_grid=tuple(t_grid),
                     engine=engine, name=name, plotted=plotted,
                     meta={"fixed_t": t_fixed, "assumed": assumed})


def _error_records(spec, p_fields, times, err):
    return [CurveRecord(preset=spec.name, engine=spec.engine, t=float(t),
                        error=f"{type(err).__name__}: {err}", **p_fields) for t in times]


def _point_fields(base: SystemParams, axis: str, value: float) -> dict:
    try:
        p = point_params(base, axis, value)
    except CelsimError:
        p = base
    return dict(A=p.A, kappa=p.kappa, Omega=p.Omega, gamma=p.gamma, Gamma_=p.Gamma, theta=p.theta)


def _run_point(args) -> list[CurveRecord]:
    spec, value = args
    times = np.asarray(spec.t_grid)
    p_fields = _point_fields(spec.base, spec.axis, value)
    try:
        p = point_params(spec.base, spec.axis, value)
        rp = derive(p)
        sd = closed_form.spectral(rp, p)
        cutoff = np.zeros(times.size, dtype=bool)
        if spec.engine == "closed_form":
            curve = closed_form.moment_curve(p, times)
            u, v, w = curve.u, curve.v, curve.w
        elif spec.engine == "moment_ode":
            traj = moment_ode.integrate_moments(drift_diffusion(rp, p), times,
                                                spec.dt or DEFAULT_ODE_DT)
            u, v, w = traj.u, traj.v, traj.w
        else:
            run = fock_oracle.evolve(p, times, spec.dt or DEFAULT_FOCK_DT, spec.cutoffs,
                                     on_cutoff="flag")
            u, v, w = run.column("n_a"), run.column("n_b"), run.column("ab")
            cutoff = run.column("cutoff_limited").astype(bool)
    except CelsimError as err:
        return _error_records(spec, p_fields, times, err)

    values = {
        "u": u, "v": v, "w": w,
        "nbar": 0.5 * (u + v),
        "dc_minus_sq": 1.0 + u + v - 2.0 * w,
        "dc_plus_sq": 1.0 + u + v + 2.0 * w,
    }
    records = []
    for i, t in enumerate(times):
        obs = {k: float(values[k][i]) for k in spec.observables}
        records.append(CurveRecord(preset=spec.name, engine=spec.engine, t=float(t),
                                   unstable=sd.unstable, degenerate=sd.degenerate,
                                   cutoff_limited=bool(cutoff[i]), **p_fields, **obs))
    return records


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[CurveRecord]:
    """Evaluate every (value, t); rows ordered by axis value, then t.

    A point whose engine fails yields rows with ``error`` set and NaN
    observables; the rest of the sweep continues.
    """
    jobs = [(spec, v) for v in spec.values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_point, jobs))
    else:
        chunks = [_run_point(j) for j in jobs]
    return [r for chunk in chunks for r in chunk]


def curves(records: list[CurveRecord]) -> dict:
    """Group records by parameter point, preserving order."""
    out: dict = {}
    for r in records:
        key = (r.A, r.kappa, r.Omega, r.gamma, r.Gamma_, r.theta)
        out.setdefault(key, []).append(r)
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


_BOOL = {"unstable", "degenerate", "cutoff_limited"}
_STR = {"preset", "engine", "error"}


def _parse(name: str, text: str):
    if name in _STR:
        return text
    if name in _BOOL:
        return text == "1"
    return float(text)


def write_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in records:
            writer.writerow([_fmt(getattr(r, c)) for c in COLUMNS])


def read_csv(path) -> list[CurveRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return [CurveRecord(**{c: _parse(c, x) for c, x in zip(COLUMNS, row)}) for row in reader]


def _json_value(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v


def write_json(records, path) -> None:
    rows = [{c: _json_value(getattr(r, c)) for c in COLUMNS} for r in records]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1, allow_nan=False)
        fh.write("\n")


def read_json(path) -> list[CurveRecord]:
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    out = []
    for row in rows:
        kw = {c: (math.nan if row[c] is None else row[c]) for c in COLUMNS}
        for c in COLUMNS:
            if c not in _STR | _BOOL:
                kw[c] = float(kw[c])
        out.append(CurveRecord(**kw))
    return out


def write_records(records, path, fmt: str | None = None) -> str:
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    if fmt == "csv":
        write_csv(records, path)
    elif fmt == "json":
        write_json(records, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return fmt


def read_records(path) -> list[CurveRecord]:
    return read_json(path) if Path(path).suffix == ".json" else read_csv(path)


def records_equal(a: CurveRecord, b: CurveRecord) -> bool:
    """Bitwise equality, treating NaN as equal to itself."""
    for f in fields(CurveRecord):
        x, y = getattr(a, f.name), getattr(b, f.name)
        if isinstance(x, float) and isinstance(y, float):
            if np.float64(x).tobytes() != np.float64(y).tobytes():
                return False
        elif x != y:
            return False
    return True


def as_dict(record: CurveRecord) -> dict:
    return asdict(record)
