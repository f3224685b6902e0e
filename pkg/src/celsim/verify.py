"""Cross-oracle and invariant checks run by ``celsim verify``."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import closed_form, fock_oracle, moment_ode, sweep_io
from .errors import NumericalInstability
from .params import SystemParams, derive, drift_diffusion

IDENTITY_TOL = 1e-12
SPECTRAL_TOL = 1e-12
ODE_REL_TOL = 1e-6
FOCK_ABS_TOL = 1e-4
TRACE_TOL = 1e-6
HEISENBERG_SLACK = 1e-9
ORDER_RANGE = (3.7, 4.3)
# step sizes as fractions of the largest step the guard admits; smaller
# steps push the RK4 error down to the roundoff floor (~1e-13)
ORDER_FRACTIONS = (1.0, 0.8, 0.64, 0.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.value:.3e} (tol {self.tol:.10g}) {self.detail}".rstrip()

    def as_dict(self) -> dict:
        return asdict(self)


def random_params(n: int, seed: int = 0) -> list[SystemParams]:
    """Valid draws covering theta > 0, gamma != Gamma and both signs of
    the radicand (small Omega with gamma < Gamma gives complex rates)."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 20.0, n)
    kappa = rng.uniform(0.0, 2.0, n)
    Omega = np.where(rng.random(n) < 0.5, rng.uniform(0.0, 20.0, n),
                     10.0 ** rng.uniform(-3.0, 0.0, n))
    gamma = 10.0 ** rng.uniform(-1.3, 0.7, n)
    Gamma = 10.0 ** rng.uniform(-1.3, 0.7, n)
    theta = np.where(rng.random(n) < 0.2, 0.0, rng.uniform(0.0, 3.0, n))
    return [SystemParams(*row) for row in zip(A, kappa, Omega, gamma, Gamma, theta)]


def rel_err(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    denom = np.maximum(np.abs(a), np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, np.abs(a - b) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(np.max(r)) if r.size else 0.0


def check_identity(draws) -> CheckResult:
    worst, n_complex = 0.0, 0
    for p in draws:
        sd = closed_form.spectral(derive(p), p)
        n_complex += sd.discriminant < 0
        worst = max(worst, abs(sd.p**2 + sd.q_plus * sd.q_minus - 1.0))
    return CheckResult("identity p^2 + q+ q- = 1", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       f"over {len(draws)} draws ({n_complex} complex)")


def check_spectral(draws, variant: str = "corrected") -> CheckResult:
    """mu_+ + mu_- and mu_+ mu_- against trace and determinant of the drift."""
    worst = 0.0
    for p in draws:
        rp = derive(p)
        sd = closed_form.spectral(rp, p)
        dd = drift_diffusion(rp, p, variant=variant)
        worst = max(worst,
                    rel_err(sd.mu_plus + sd.mu_minus, dd.trace),
                    rel_err(sd.mu_plus * sd.mu_minus, dd.det))
    return CheckResult(f"spectral trace/det ({variant} drift)", worst <= SPECTRAL_TOL, worst,
                       SPECTRAL_TOL, f"over {len(draws)} draws")


def preset_points(stable_only: bool = False):
    """(preset name, params, t_grid) for every point of the twelve presets."""
    out = []
    for name in sweep_io.PRESETS:
        spec = sweep_io.preset(name)
        for p in spec.points():
            if stable_only and closed_form.spectral(derive(p), p).unstable:
                continue
            out.append((name, p, np.asarray(spec.t_grid)))
    return out


def check_closed_vs_ode(points, dt: float = 1e-4, variant: str = "corrected",
                        label: str = "") -> CheckResult:
    worst, where = 0.0, ""
    for name, p, t in points:
        curve = closed_form.moment_curve(p, t)
        traj = moment_ode.integrate_moments(drift_diffusion(derive(p), p, variant), t, dt)
        for key in ("u", "v", "w"):
            e = rel_err(getattr(curve, key), getattr(traj, key))
            if e > worst:
                worst, where = e, f"worst {name} A={p.A:g} theta={p.theta:g} " \
                                  f"gamma/Gamma={p.gamma / p.Gamma:g} [{key}]"
    return CheckResult(f"closed form vs moment ODE{label}", worst <= ODE_REL_TOL, worst,
                       ODE_REL_TOL, f"{len(points)} curves, dt={dt:g}; {where}")


def check_heisenberg(points) -> CheckResult:
    worst = np.inf
    for _, p, t in points:
        dm, dp = closed_form.quadrature_variances(closed_form.moment_curve(p, t))
        worst = min(worst, float(np.min(dm * dp)))
    return CheckResult("Heisenberg dc+^2 dc-^2 >= 1", worst >= 1.0 - HEISENBERG_SLACK, worst,
                       1.0 - HEISENBERG_SLACK, f"minimum product over {len(points)} curves")


def check_vacuum_limits() -> CheckResult:
    worst = 0.0
    t = np.linspace(0.0, 5.0, 64)
    for _, p, _ in preset_points():
        m = closed_form.second_moments(p, 0.0)
        dm, dp = closed_form.quadrature_variances(m)
        worst = max(worst, abs(dm - 1.0), abs(dp - 1.0), abs(closed_form.mean_photon_pairs(m)))
        c = closed_form.moment_curve(p.replace(A=0.0), t)
        worst = max(worst, float(np.max(np.abs(np.concatenate([c.u, c.v, c.w])))))
    return CheckResult("vacuum at t=0 and for A=0", worst == 0.0, worst, 0.0)


FOCK_CASE = SystemParams(A=2.0, kappa=0.5, Omega=0.5, gamma=1.0, Gamma=1.0, theta=0.0)


def check_fock(p: SystemParams = FOCK_CASE, cutoffs=(12, 12), t_max: float = 1.0,
               n_t: int = 21, dt: float = 1e-3) -> list[CheckResult]:
    t = np.linspace(0.0, t_max, n_t)
    run = fock_oracle.evolve(p, t, dt=dt, cutoffs=cutoffs, on_cutoff="flag")
    curve = closed_form.moment_curve(p, t)
    delta = max(float(np.max(np.abs(run.column("n_a") - curve.u))),
                float(np.max(np.abs(run.column("n_b") - curve.v))),
                float(np.max(np.abs(run.column("ab") - curve.w))))
    drift = float(np.max(np.abs(run.column("trace") - 1.0)))
    tail = float(np.max(run.column("tail")))
    return [
        CheckResult("Fock vs closed form |delta u,v,w|", delta < FOCK_ABS_TOL, delta, FOCK_ABS_TOL,
                    f"A={p.A:g}, cutoffs {cutoffs}, t<={t_max:g}"),
        CheckResult("Fock trace drift", drift < TRACE_TOL, drift, TRACE_TOL),
        CheckResult("Fock tail occupancy", tail < fock_oracle.TAIL_TOL, tail, fock_oracle.TAIL_TOL),
    ]


def convergence_order(p: SystemParams, t_end: float = 5.0,
                      fractions=ORDER_FRACTIONS) -> tuple[float, list, list]:
    """Least-squares slope of log(error) against log(step) at ``t_end``.

    Error is max |x - x_closed| / max |x_closed| over (u, v, w); the step is
    the substep actually taken, t_end / n_steps.
    """
    dd = drift_diffusion(derive(p), p)
    ref = closed_form.moment_curve(p, [t_end])
    exact = np.array([ref.u[0], ref.v[0], ref.w[0]])
    largest = moment_ode.STEP_GUARD / dd.max_rate()
    steps, errors = [], []
    for f in fractions:
        traj = moment_ode.integrate_moments(dd, [t_end], largest * f)
        x = np.array([traj.u[0], traj.v[0], traj.w[0]])
        steps.append(t_end / traj.n_steps)
        errors.append(float(np.max(np.abs(x - exact)) / np.max(np.abs(exact))))
    slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
    return slope, steps, errors


def check_order(name: str = "fig1") -> CheckResult:
    lo, hi = ORDER_RANGE
    slopes = {}
    for p in sweep_io.preset(name).points():
        slopes[p.A] = convergence_order(p)[0]
    worst = max(slopes.values(), key=lambda s: abs(s - 4.0))
    ok = all(lo <= s <= hi for s in slopes.values())
    detail = ", ".join(f"A={a:g}: {s:.3f}" for a, s in slopes.items())
    return CheckResult(f"moment ODE convergence order ({name})", ok, worst, hi,
                       f"range [{lo}, {hi}]; {detail}")


def _timed(fn, *args, **kw):
    start = time.perf_counter()
    out = fn(*args, **kw)
    elapsed = time.perf_counter() - start
    for r in out if isinstance(out, list) else [out]:
        r.seconds = elapsed
    return out


def run_checks(level: str = "fast", variant: str = "corrected", seed: int = 0,
               n_draws: int = 10_000) -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    draws = random_params(n_draws, seed)
    results = [
        _timed(check_identity, draws),
        _timed(check_spectral, draws, variant),
    ]
    stable = preset_points(stable_only=True)
    everything = preset_points()
    results.append(_timed(check_closed_vs_ode, stable, variant=variant, label=" (stable points)"))
    try:
        results.append(_timed(check_closed_vs_ode, everything, variant=variant,
                              label=" (all preset points)"))
    except NumericalInstability as err:
        results.append(CheckResult("closed form vs moment ODE (all preset points)", False,
                                   float("nan"), ODE_REL_TOL, str(err)))
    results.append(_timed(check_heisenberg, stable))
    results.append(_timed(check_vacuum_limits))
    results.append(_timed(check_order))
    if level == "full":
        results.extend(_timed(check_fock))
    return results
