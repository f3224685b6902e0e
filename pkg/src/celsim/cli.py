"""celsim command line.

    celsim evaluate --A 10 --kappa 0.5 --Omega 0.5 --t 0 0.5 1
    celsim figure fig6 --out fig6.csv
    celsim sweep --axis theta --values 0 0.5 1 --A 10 --kappa 0.5 --Omega 10
    celsim verify fast [--as-printed-drift] [--json]

Exit codes: 0 ok, 1 verification failed, 2 invalid input, 3 numerical error.
Flags may also come from ``--config FILE`` (flat ``key = value`` lines, keys
named like the flags); explicit flags win. CELSIM_OUTPUT_DIR sets where
output files go when --out is a bare name or omitted.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import closed_form, fock_oracle, moment_ode, sweep_io, verify
from .errors import CelsimError, NumericalError, ParameterError
from .params import SystemParams, derive, drift_diffusion

log = logging.getLogger("celsim")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_DIR_ENV = "CELSIM_OUTPUT_DIR"
PARAM_FLAGS = ("A", "kappa", "Omega", "gamma", "Gamma", "theta")
# config keys that hold lists, and how to parse their items
_LIST_KEYS = {"t": float, "values": float, "cutoffs": int}
_SCALAR_KEYS = {
    **{k: float for k in PARAM_FLAGS},
    "dt": float, "t_max": float, "n_t": int, "workers": int,
    "engine": str, "format": str, "out": str, "axis": str, "name": str,
}


class UsageError(Exception):
    """Bad input; the message names the offending flag."""


@dataclass
class CliConfig:
    subcommand: str
    overrides: dict = field(default_factory=dict)
    out: str | None = None
    format: str | None = None
    engine: str = "closed_form"
    verbosity: int = 0


def _param_flag(name: str) -> str:
    return "--values" if name == "gamma_over_Gamma" else f"--{name}"


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file. Lists are whitespace or comma separated."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as err:
        raise UsageError(f"--config: cannot read {path}: {err.strerror}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        try:
            if key in _LIST_KEYS:
                out[key] = [_LIST_KEYS[key](x) for x in value.replace(",", " ").split()]
            elif key in _SCALAR_KEYS:
                out[key] = _SCALAR_KEYS[key](value)
            else:
                raise UsageError(f"--config: line {n}: unknown key {key!r}")
        except ValueError:
            raise UsageError(f"--{key}: invalid value {value!r} in {path}") from None
    return out


def _merge_config(args, defaults: dict) -> None:
    """Fill flags left unset on the command line from the config file, then defaults."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    for key, value in conf.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    for key, value in defaults.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _params(args) -> SystemParams:
    """Validated parameters; derive() is run so bad input fails before any engine."""
    try:
        p = SystemParams(**{k: getattr(args, k) for k in PARAM_FLAGS})
        derive(p)
    except ParameterError as err:
        raise UsageError(f"{_param_flag(err.field)}: {err.message}") from None
    return p


def _output_path(out: str | None, default_name: str) -> Path:
    base = os.environ.get(OUTPUT_DIR_ENV)
    path = Path(out) if out else Path(default_name)
    if base and not path.is_absolute() and path.parent == Path("."):
        path = Path(base) / path
    return path


def _time_grid(args) -> tuple:
    if args.t:
        t = np.asarray(args.t, dtype=float)
    else:
        if args.n_t < 1:
            raise UsageError("--n-t: must be >= 1")
        t = np.linspace(0.0, args.t_max, args.n_t)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise UsageError("--t: times must be finite and >= 0")
    if np.any(np.diff(t) <= 0):
        raise UsageError("--t: times must be strictly increasing")
    return tuple(float(x) for x in t)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, complex):
        if x.imag == 0:
            return format(x.real, ".10g")
        return f"{x.real:.10g}{x.imag:+.10g}j"
    return format(float(x), ".10g")


def cmd_evaluate(args) -> int:
    p = _params(args)
    times = _time_grid(args)
    rp = derive(p)
    sd = closed_form.spectral(rp, p)
    cutoff = [False] * len(times)
    if args.engine == "closed_form":
        m = closed_form.moment_curve(p, times)
        u, v, w = m.u, m.v, m.w
    elif args.engine == "moment_ode":
        traj = moment_ode.integrate_moments(drift_diffusion(rp, p), times,
                                            args.dt or sweep_io.DEFAULT_ODE_DT)
        u, v, w = traj.u, traj.v, traj.w
    else:
        run = fock_oracle.evolve(p, times, args.dt or sweep_io.DEFAULT_FOCK_DT,
                                 tuple(args.cutoffs), on_cutoff="flag")
        u, v, w = run.column("n_a"), run.column("n_b"), run.column("ab")
        cutoff = list(run.column("cutoff_limited").astype(bool))
    print(f"mu_plus={_fmt(sd.mu_plus)} mu_minus={_fmt(sd.mu_minus)} "
          f"unstable={_fmt(sd.unstable)} degenerate={_fmt(sd.degenerate)} engine={args.engine}")
    for i, t in enumerate(times):
        base = 1.0 + u[i] + v[i]
        print(f"t={_fmt(t)} dc_minus_sq={_fmt(base - 2 * w[i])} dc_plus_sq={_fmt(base + 2 * w[i])} "
              f"nbar={_fmt(0.5 * (u[i] + v[i]))} u={_fmt(u[i])} v={_fmt(v[i])} w={_fmt(w[i])} "
              f"cutoff_limited={_fmt(cutoff[i])}")
    return EXIT_OK


def _axis_label(spec: sweep_io.SweepSpec, p: SystemParams) -> str:
    if spec.axis == "gamma_over_Gamma":
        return f"gamma/Gamma={p.gamma / p.Gamma:g}"
    return f"{spec.axis}={getattr(p, spec.axis):g}"


def _summarize(spec: sweep_io.SweepSpec, records) -> int:
    """One line per curve; returns the number of curves that failed."""
    failed = 0
    for p, rows in zip(spec.points(), sweep_io.curves(records).values()):
        label = _axis_label(spec, p)
        if rows[0].error:
            failed += 1
            print(f"{spec.name} {label}: error {rows[0].error}")
            continue
        y = np.array([r.dc_minus_sq for r in rows])
        i = int(np.argmin(y))
        flags = " unstable" if rows[0].unstable else ""
        if any(r.cutoff_limited for r in rows):
            flags += " cutoff_limited"
        print(f"{spec.name} {label}: min dc_minus_sq={y[i]:.6g} at t={rows[i].t:.6g}"
              f" nbar(t_end)={rows[-1].nbar:.6g}{flags}")
    return failed


def _write(spec, records, args) -> int:
    fmt = args.format
    default = f"{spec.name}.{fmt or 'csv'}"
    path = _output_path(args.out, default)
    if fmt is None:
        fmt = "json" if path.suffix == ".json" else "csv"
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    sweep_io.write_records(records, path, fmt)
    failed = _summarize(spec, records)
    print(f"wrote {len(records)} rows to {path}")
    return EXIT_NUMERIC if failed else EXIT_OK


def _with_engine(spec: sweep_io.SweepSpec, args) -> sweep_io.SweepSpec:
    cutoffs = tuple(args.cutoffs) if args.cutoffs else spec.cutoffs
    try:
        return replace(spec, engine=args.engine, dt=args.dt, cutoffs=cutoffs)
    except ValueError as err:
        raise UsageError(f"--engine: {err}") from None


def cmd_figure(args) -> int:
    try:
        spec = sweep_io.preset(args.name, t_grid=tuple(args.t) if args.t else None)
    except ValueError as err:
        raise UsageError(f"name: {err}") from None
    spec = _with_engine(spec, args)
    return _write(spec, sweep_io.run_sweep(spec, workers=args.workers), args)


def cmd_sweep(args) -> int:
    base = _params(args)
    if not args.values:
        raise UsageError("--values: at least one value is required")
    try:
        spec = sweep_io.SweepSpec(base=base, axis=args.axis, values=tuple(args.values),
                                  t_grid=_time_grid(args), name=args.name)
    except ParameterError as err:
        raise UsageError(f"{_param_flag(err.field)}: {err.message}") from None
    except ValueError as err:
        raise UsageError(f"--axis: {err}") from None
    spec = _with_engine(spec, args)
    return _write(spec, sweep_io.run_sweep(spec, workers=args.workers), args)


def cmd_verify(args) -> int:
    variant = "as_printed" if args.as_printed_drift else "corrected"
    results = verify.run_checks(args.level, variant=variant, seed=args.seed, n_draws=args.draws)
    ok = all(r.passed for r in results)
    if args.json:
        summary = {"level": args.level, "variant": variant, "passed": ok,
                   "checks": [{k: v for k, v in r.as_dict().items() if k != "seconds"}
                              for r in results]}
        print(json.dumps(summary, indent=1, default=_json_default))
    else:
        for r in results:
            print(r.line())
        print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VERIFY


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(type(x).__name__)


def _add_params(sp) -> None:
    g = sp.add_argument_group("parameters (gamma = Gamma = 1 by default)")
    for name in PARAM_FLAGS:
        g.add_argument(f"--{name}", type=float, default=None, metavar="X")


def _add_engine(sp) -> None:
    sp.add_argument("--engine", choices=sweep_io.ENGINES, default=None)
    sp.add_argument("--dt", type=float, default=None, help="step for ODE or Fock engines")
    sp.add_argument("--cutoffs", type=int, nargs=2, default=None, metavar=("NA", "NB"))


def _add_output(sp) -> None:
    sp.add_argument("--out", default=None, help=f"output file (relative to ${OUTPUT_DIR_ENV})")
    sp.add_argument("--format", choices=("csv", "json"), default=None)
    sp.add_argument("--workers", type=int, default=None)


def _add_times(sp) -> None:
    sp.add_argument("--t", type=float, nargs="+", default=None, help="explicit times")
    sp.add_argument("--t-max", dest="t_max", type=float, default=None)
    sp.add_argument("--n-t", dest="n_t", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="celsim", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    ev = sub.add_parser("evaluate", help="moments and variances at one parameter point")
    _add_params(ev)
    _add_times(ev)
    _add_engine(ev)
    ev.add_argument("--config", default=None)
    ev.set_defaults(func=cmd_evaluate)

    fig = sub.add_parser("figure", help="write a figure preset sweep")
    fig.add_argument("name", help="fig1 .. fig12")
    fig.add_argument("--t", type=float, nargs="+", default=None)
    _add_engine(fig)
    _add_output(fig)
    fig.add_argument("--config", default=None)
    fig.set_defaults(func=cmd_figure)

    sw = sub.add_parser("sweep", help="sweep one parameter")
    _add_params(sw)
    sw.add_argument("--axis", choices=sweep_io.AXES, default=None)
    sw.add_argument("--values", type=float, nargs="+", default=None)
    sw.add_argument("--name", default=None)
    _add_times(sw)
    _add_engine(sw)
    _add_output(sw)
    sw.add_argument("--config", default=None)
    sw.set_defaults(func=cmd_sweep)

    ve = sub.add_parser("verify", help="run the cross-oracle and invariant checks")
    ve.add_argument("level", choices=("fast", "full"))
    ve.add_argument("--as-printed-drift", action="store_true",
                    help="use the drift with 2(zeta' + chi); the spectral check should fail")
    ve.add_argument("--json", action="store_true", help="machine-readable summary")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--draws", type=int, default=10_000)
    ve.set_defaults(func=cmd_verify)
    return parser


_DEFAULTS = dict(A=10.0, kappa=0.5, Omega=0.5, gamma=1.0, Gamma=1.0, theta=0.0,
                 engine="closed_form", t_max=5.0, n_t=512, workers=1, cutoffs=None,
                 axis="A", name="sweep")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _merge_config(args, _DEFAULTS)
        if getattr(args, "cutoffs", None) is None and hasattr(args, "cutoffs"):
            args.cutoffs = list(fock_oracle.DEFAULT_CUTOFFS)
        if getattr(args, "dt", None) is not None and not (math.isfinite(args.dt) and args.dt > 0):
            raise UsageError("--dt: must be finite and > 0")
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers: must be >= 1")
        config = CliConfig(args.subcommand,
                           {k: getattr(args, k) for k in PARAM_FLAGS if hasattr(args, k)},
                           getattr(args, "out", None), getattr(args, "format", None),
                           getattr(args, "engine", None) or "closed_form", args.verbose)
        log.debug("%s", config)
        return args.func(args)
    except UsageError as err:
        print(f"celsim: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as err:
        print(f"celsim: numerical error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except CelsimError as err:
        print(f"celsim: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
