"""Physical parameters of the pumped correlated emission laser and the
dimensionless groups derived from them.

All rates share one time unit; the figure presets use gamma = Gamma = 1.
The random preparation phase is averaged once, here: every ``exp(+-i phi)``
factor becomes ``exp(-theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

DRIFT_VARIANTS = ("corrected", "as_printed")


@dataclass(frozen=True)
class SystemParams:
    """Raw physical inputs.

    A      linear gain coefficient
    kappa  cavity decay rate (both modes)
    Omega  drive amplitude
    gamma  decay rate of the upper/lower coherent superposition
    Gamma  spontaneous atomic decay rate
    theta  phase-fluctuation variance (dimensionless)
    """

    A: float
    kappa: float
    Omega: float
    gamma: float = 1.0
    Gamma: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f.name, f"not a number: {value!r}") from None
            if not math.isfinite(value):
                raise ParameterError(f.name, f"must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        for name in ("A", "kappa", "Omega", "theta"):
            if getattr(self, name) < 0:
                raise ParameterError(name, f"must be >= 0, got {getattr(self, name)!r}")
        for name in ("gamma", "Gamma"):
            if getattr(self, name) <= 0:
                raise ParameterError(name, f"must be > 0, got {getattr(self, name)!r}")

    def replace(self, **changes) -> "SystemParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SystemParams(**values)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ReducedParams:
    zeta: float
    zeta_p: float
    chi: float
    B: float
    eth: float
    C: float
    D: float
    E: float
    L: float
    M: float

    @property
    def coherence(self) -> float:
        """zeta'(1 + zeta' zeta), the drive-induced two-photon coherence."""
        return self.zeta_p * (1.0 + self.zeta_p * self.zeta)

    @property
    def split(self) -> float:
        """zeta'^2 + chi; half of C."""
        return self.zeta_p**2 + self.chi


@dataclass(frozen=True)
class DriftDiffusion:
    """Linear Langevin system for (alpha, beta*).

    d alpha/dt = -eta_a alpha + xi_a beta* + f_a
    d beta*/dt = -eta_b beta* + xi_b alpha + f_b*

    with <f_a f_a*> = d_aa and <f_b f_a> = d_ab (delta-correlated).
    """

    eta_a: float
    eta_b: float
    xi_a: float
    xi_b: float
    d_aa: float
    d_ab: float
    variant: str = "corrected"
    trace_ext: float | None = field(default=None, repr=False)
    det_ext: float | None = field(default=None, repr=False)

    def matrix(self) -> np.ndarray:
        """2x2 drift matrix acting on (alpha, beta*)."""
        return np.array([[-self.eta_a, self.xi_a], [self.xi_b, -self.eta_b]])

    @property
    def trace(self) -> float:
        """eta_a + eta_b (= mu_+ + mu_-)."""
        if self.trace_ext is not None:
            return self.trace_ext
        return self.eta_a + self.eta_b

    @property
    def det(self) -> float:
        """Determinant of the drift matrix (= mu_+ mu_-).

        Near threshold this is a small difference of large products; when
        built by drift_diffusion it is evaluated before rounding the entries.
        """
        if self.det_ext is not None:
            return self.det_ext
        return self.eta_a * self.eta_b - self.xi_a * self.xi_b

    def rates(self) -> tuple[complex, complex]:
        """(mu_+, mu_-) as eigen-rates of the drift matrix."""
        half_sum = 0.5 * (self.eta_a + self.eta_b)
        half_diff = 0.5 * (self.eta_b - self.eta_a)
        root = np.sqrt(complex(half_diff**2 + self.xi_a * self.xi_b))
        return half_sum + root, half_sum - root

    def max_rate(self) -> float:
        return max(abs(self.eta_a), abs(self.eta_b), abs(self.xi_a), abs(self.xi_b))


class ExtendedGroups(NamedTuple):
    """Dimensionless groups in long double, for cancellation-prone paths."""

    A: np.longdouble
    kappa: np.longdouble
    B: np.longdouble
    D: np.longdouble
    E: np.longdouble
    coherence: np.longdouble
    split: np.longdouble


def _groups(p: SystemParams, one):
    zeta = one * p.Omega / p.gamma
    zeta_p = one * p.Omega / p.Gamma
    chi = one * p.gamma / p.Gamma
    eth = np.exp(-one * p.theta)
    B = (4 + zeta**2) * (1 + zeta_p * zeta)
    C = 2 * (zeta_p**2 + chi)
    D = (2 * zeta_p + zeta) * eth
    E = (2 - zeta_p * zeta) * eth
    L = 2 * zeta_p**2 + 2 * chi - (2 * zeta_p + zeta) * eth
    M = zeta_p * (1 + zeta_p * zeta) + (2 - zeta_p * zeta) * eth
    return zeta, zeta_p, chi, eth, B, C, D, E, L, M


def derive(p: SystemParams) -> ReducedParams:
    names = ("zeta", "zeta_p", "chi", "eth", "B", "C", "D", "E", "L", "M")
    return ReducedParams(**{k: float(x) for k, x in zip(names, _groups(p, 1.0))})


def extended_groups(p: SystemParams) -> ExtendedGroups:
    one = np.longdouble(1)
    zeta, zeta_p, chi, eth, B, C, D, E, L, M = _groups(p, one)
    return ExtendedGroups(A=one * p.A, kappa=one * p.kappa, B=B, D=D, E=E,
                          coherence=zeta_p * (1 + zeta_p * zeta), split=zeta_p**2 + chi)


def drift_diffusion(rp: ReducedParams, p: SystemParams,
                    variant: str = "corrected") -> DriftDiffusion:
    """Assemble the Langevin drift and noise strengths.

    ``variant="as_printed"`` splits the gain with 2(zeta' + chi) instead of
    2(zeta'^2 + chi). It exists only to demonstrate that the closed-form
    eigen-rates are then no longer the eigenvalues of the drift; the
    default is the self-consistent form.
    """
    g = extended_groups(p)
    if variant == "corrected":
        split = g.split
    elif variant == "as_printed":
        split = np.longdouble(p.Omega) / p.Gamma + np.longdouble(p.gamma) / p.Gamma
    else:
        raise ParameterError("variant", f"expected one of {DRIFT_VARIANTS}, got {variant!r}")
    A, B, kappa = g.A, g.B, g.kappa
    eta_a = (B * kappa + A * (g.D - 2 * split)) / (2 * B)
    eta_b = (B * kappa + A * (g.D + 2 * split)) / (2 * B)
    xi_a = A * (g.coherence - g.E) / (2 * B)
    xi_b = A * (g.coherence + g.E) / (2 * B)
    return DriftDiffusion(
        eta_a=float(eta_a),
        eta_b=float(eta_b),
        xi_a=float(xi_a),
        xi_b=float(xi_b),
        d_aa=p.A / rp.B * rp.L,
        d_ab=p.A / (2.0 * rp.B) * rp.M,
        variant=variant,
        trace_ext=float(eta_a + eta_b),
        det_ext=float(eta_a * eta_b - xi_a * xi_b),
    )


def gamma_ratio_params(base: SystemParams, ratio: float) -> SystemParams:
    """Set gamma/Gamma = ``ratio`` keeping gamma and Omega fixed."""
    if ratio <= 0:
        raise ParameterError("gamma_over_Gamma", f"must be > 0, got {ratio!r}")
    return base.replace(Gamma=base.gamma / ratio)
