"""Classical fourth-order Runge-Kutta, fixed step."""
from __future__ import annotations

import math

import numpy as np


def rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def linear_rk4_map(K: np.ndarray, d: np.ndarray, h: float):
    """One RK4 step of y' = K y + d written as y -> P y + q.

    For an autonomous linear right-hand side the four stages collapse to a
    degree-4 Taylor polynomial in hK; the result is identical to calling
    rk4_step with f = K y + d, up to rounding.
    """
    n = K.shape[0]
    hK = h * K
    eye = np.eye(n)
    hK2 = hK @ hK
    hK3 = hK2 @ hK
    P = eye + hK + hK2 / 2.0 + hK3 / 6.0 + hK3 @ hK / 24.0
    q = h * (eye + hK / 2.0 + hK2 / 6.0 + hK3 / 24.0) @ d
    return P, q


def substeps(span: float, dt: float) -> tuple[int, float]:
    """Split ``span`` into the fewest equal steps no longer than ``dt``."""
    if span <= 0.0:
        return 0, 0.0
    n = max(1, math.ceil(span / dt * (1.0 - 1e-12)))
    return n, span / n


def check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if t[0] < 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be nonnegative and strictly increasing")
    return t
