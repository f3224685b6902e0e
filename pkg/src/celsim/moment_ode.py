"""Deterministic second-moment equations of the Langevin system.

For x = (u, v, w):

    u' = -2 eta_a u + 2 xi_a w + d_aa
    v' = -2 eta_b v + 2 xi_b w
    w' = xi_b u + xi_a v - (eta_a + eta_b) w + d_ab

This module never touches the analytic solution; it is integrated with
fixed-step RK4 from the two-mode vacuum and serves as an oracle for it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .closed_form import MomentState
from .errors import NumericalInstability, SingularDrift, StepTooLarge
from .params import DriftDiffusion
from .rk4 import check_grid, linear_rk4_map, substeps

STEP_GUARD = 0.1
SINGULAR_TOL = 1e-9


def moment_matrix(dd: DriftDiffusion) -> np.ndarray:
    return np.array([
        [-2.0 * dd.eta_a, 0.0, 2.0 * dd.xi_a],
        [0.0, -2.0 * dd.eta_b, 2.0 * dd.xi_b],
        [dd.xi_b, dd.xi_a, -(dd.eta_a + dd.eta_b)],
    ])


def diffusion_vector(dd: DriftDiffusion) -> np.ndarray:
    return np.array([dd.d_aa, 0.0, dd.d_ab])


def moment_rhs(dd: DriftDiffusion):
    K = moment_matrix(dd)
    d = diffusion_vector(dd)
    return lambda t, x: K @ x + d


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    dt: float
    order: int = 4
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def states(self) -> list[MomentState]:
        return [MomentState(float(t), float(a), float(b), float(c))
                for t, a, b, c in zip(self.times, self.u, self.v, self.w)]


def integrate_moments(dd: DriftDiffusion, t_grid, dt: float, x0=(0.0, 0.0, 0.0)) -> MomentTrajectory:
    """RK4 from t = 0 to every grid time.

    Each grid interval is cut into the fewest equal substeps no longer than
    ``dt``, so grid points are hit exactly without interpolation.
    """
    times = check_grid(t_grid)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if dt * dd.max_rate() > STEP_GUARD:
        raise StepTooLarge(
            f"dt * max rate = {dt * dd.max_rate():.3g} > {STEP_GUARD} (dt={dt:g})")
    K = moment_matrix(dd)
    d = diffusion_vector(dd)

    out = np.empty((times.size, 3))
    x = [float(c) for c in x0]
    t_prev = 0.0
    total = 0
    for i, t in enumerate(times):
        n, h = substeps(t - t_prev, dt)
        if n:
            P, q = linear_rk4_map(K, d, h)
            (p00, p01, p02), (p10, p11, p12), (p20, p21, p22) = P.tolist()
            q0, q1, q2 = q.tolist()
            a, b, c = x
            for _ in range(n):
                a, b, c = (p00 * a + p01 * b + p02 * c + q0,
                           p10 * a + p11 * b + p12 * c + q1,
                           p20 * a + p21 * b + p22 * c + q2)
            x = [a, b, c]
            total += n
        out[i] = x
        t_prev = t
    return MomentTrajectory(times, out[:, 0].copy(), out[:, 1].copy(), out[:, 2].copy(),
                            dt=dt, n_steps=total, meta={"method": "rk4", "guard": STEP_GUARD})


def steady_state(dd: DriftDiffusion) -> MomentState:
    """Fixed point K x = -d of the moment equations."""
    K = moment_matrix(dd)
    eig = np.linalg.eigvals(K)
    scale = max(np.max(np.abs(eig)), 1e-300)
    if np.min(np.abs(eig)) <= SINGULAR_TOL * scale:
        raise SingularDrift(f"moment drift is singular: eigenvalues {eig}")
    if np.max(eig.real) > 0:
        raise NumericalInstability(
            f"above threshold (growth rate {np.max(eig.real):.6g}); no attracting steady state")
    u, v, w = np.linalg.solve(K, -diffusion_vector(dd))
    return MomentState(float("inf"), float(u), float(v), float(w))
