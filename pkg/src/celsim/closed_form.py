"""Analytic solution for the noise-averaged second moments.

Starting from the two-mode vacuum, the only nonzero second moments are

    u = <alpha* alpha>,  v = <beta* beta>,  w = <alpha beta>,

and every first moment as well as <alpha^2>, <beta^2>, <alpha* beta>
vanishes. The moments are sums of three relaxing exponentials with rates
2 mu_+, 2 mu_- and mu_+ + mu_-.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSpectrum, NumericalError, NumericalInstability
from .params import ReducedParams, SystemParams, derive, extended_groups

DEGENERACY_TOL = 1e-10
DEGENERACY_SHIFT = 1e-8
IMAG_TOL = 1e-9
GROWTH_LIMIT = 1e12


@dataclass(frozen=True)
class SpectralDecomposition:
    mu_plus: complex
    mu_minus: complex
    p: complex
    q_plus: complex
    q_minus: complex
    discriminant: float
    degenerate: bool

    @property
    def unstable(self) -> bool:
        return self.mu_minus.real <= 0.0

    def instability_horizon(self, growth_limit: float = GROWTH_LIMIT) -> float:
        """Time after which moments have grown by more than ``growth_limit``."""
        rate = -self.mu_minus.real
        if rate <= 0.0:
            return math.inf
        return math.log(growth_limit) / (2.0 * rate)


class Propagators(NamedTuple):
    F_plus: np.ndarray
    F_minus: np.ndarray
    G_plus: np.ndarray
    G_minus: np.ndarray


@dataclass(frozen=True)
class MomentState:
    t: float
    u: float
    v: float
    w: float
    unstable: bool = False
    degenerate: bool = False

    @property
    def physical(self) -> bool:
        """Photon numbers nonnegative up to roundoff.

        Fails when the normally ordered diffusion d_aa is negative, which the
        linearized model permits for gamma < Gamma with strong drive.
        """
        tol = 1e-12 * max(1.0, abs(self.u), abs(self.v))
        return self.u >= -tol and self.v >= -tol


@dataclass(frozen=True)
class MomentCurve:
    """Vectorized moments on a time grid, with the spectrum that produced them."""

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    spectrum: SpectralDecomposition

    @property
    def unstable(self) -> bool:
        return self.spectrum.unstable

    @property
    def degenerate(self) -> bool:
        return self.spectrum.degenerate

    def state(self, i: int) -> MomentState:
        return MomentState(float(self.times[i]), float(self.u[i]), float(self.v[i]),
                           float(self.w[i]), self.unstable, self.degenerate)


class QuadratureVariances(NamedTuple):
    dc_minus_sq: float
    dc_plus_sq: float


def _rounded(z):
    """Round a long-double result to float, or complex when it has an imaginary part."""
    if np.iscomplexobj(z):
        return complex(z) if z.imag != 0 else float(z.real)
    return float(z)


def spectral(rp: ReducedParams, p: SystemParams, strict: bool = False) -> SpectralDecomposition:
    """Eigen-rates mu_+- and mixing amplitudes p, q_+- of the drift.

    Evaluated in long double from ``p`` and rounded once at the end, so that
    mu_- keeps full relative accuracy near threshold where it is a small
    difference of large terms. ``rp`` must be ``derive(p)``.

    At a degenerate point (vanishing radicand) p and q_+- diverge while the
    moments stay finite. Unless ``strict``, E^2 is lowered by
    DEGENERACY_SHIFT * scale, which shifts the radicand by the same amount
    and keeps p^2 + q_+ q_- = 1 exact.
    """
    g = extended_groups(p)
    coh, split, E = g.coherence, g.split, g.E
    e_sq = E * E
    scale = coh**2 + 4 * split**2 + e_sq
    radicand = coh**2 + 4 * split**2 - e_sq
    discriminant = float(radicand)
    degenerate = abs(radicand) < DEGENERACY_TOL * scale
    if degenerate:
        if strict:
            raise DegenerateSpectrum(
                f"radicand {discriminant:.3e} below {DEGENERACY_TOL:g} x scale {float(scale):.3e}")
        e_sq = e_sq - DEGENERACY_SHIFT * scale
        E = np.copysign(np.sqrt(e_sq), E)
        radicand = coh**2 + 4 * split**2 - e_sq

    root = np.sqrt(np.clongdouble(radicand)) if radicand < 0 else np.sqrt(radicand)
    gain = g.A / (2 * g.B)
    return SpectralDecomposition(
        mu_plus=_rounded(g.kappa / 2 + gain * (g.D + root)),
        mu_minus=_rounded(g.kappa / 2 + gain * (g.D - root)),
        p=_rounded(2 * split / root),
        q_plus=_rounded((-coh + E) / root),
        q_minus=_rounded((-coh - E) / root),
        discriminant=discriminant,
        degenerate=bool(degenerate),
    )


def propagators(sd: SpectralDecomposition, t) -> Propagators:
    """Homogeneous solution: alpha(t) = F+ alpha(0) + G+ beta*(0), etc."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    e_plus = np.exp(-sd.mu_plus * t)
    e_minus = np.exp(-sd.mu_minus * t)
    F_plus = 0.5 * ((1 + sd.p) * e_minus + (1 - sd.p) * e_plus)
    F_minus = 0.5 * ((1 - sd.p) * e_minus + (1 + sd.p) * e_plus)
    G_plus = 0.5 * sd.q_plus * (e_plus - e_minus)
    G_minus = 0.5 * sd.q_minus * (e_plus - e_minus)
    return Propagators(F_plus, F_minus, G_plus, G_minus)


def _relax(rate, t: np.ndarray) -> np.ndarray:
    # (1 - exp(-rate t)) / rate, continuous through rate = 0
    if rate == 0:
        return t.astype(complex)
    return -np.expm1(-rate * t) / rate


def _realify(name: str, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    bad = np.abs(z.imag) > IMAG_TOL * np.maximum(1.0, np.abs(z.real))
    if np.any(bad):
        raise NumericalError(
            f"{name}: residual imaginary part {np.max(np.abs(z.imag)):.3e} exceeds {IMAG_TOL:g}")
    return z.real.copy()


def moment_curve(p: SystemParams, times, strict: bool = False,
                 growth_limit: float = GROWTH_LIMIT) -> MomentCurve:
    """u, v, w on a grid of times, starting from the two-mode vacuum."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("t must be >= 0")
    rp = derive(p)
    sd = spectral(rp, p, strict=strict)
    if times.size and sd.unstable and times.max() > sd.instability_horizon(growth_limit):
        raise NumericalInstability(
            f"mu_- = {sd.mu_minus:.6g} <= 0: moments exceed growth limit {growth_limit:g} "
            f"after t = {sd.instability_horizon(growth_limit):.6g}")

    A, B, L, M = p.A, rp.B, rp.L, rp.M
    pp, qp, qm = sd.p, sd.q_plus, sd.q_minus
    r_plus = _relax(2 * sd.mu_plus, times)
    r_minus = _relax(2 * sd.mu_minus, times)
    r_mixed = _relax(sd.mu_plus + sd.mu_minus, times)

    u = (A / (4 * B) * (L * (1 - pp) ** 2 + M * qp * (1 - pp)) * r_plus
         + A / (4 * B) * (L * (1 + pp) ** 2 - M * qp * (1 + pp)) * r_minus
         + A / (2 * B) * (L * (1 - pp**2) + M * qp * pp) * r_mixed)
    v = (A / (4 * B) * (L * qm**2 + M * qm * (1 + pp)) * r_plus
         + A / (4 * B) * (L * qm**2 - M * qm * (1 - pp)) * r_minus
         - A / (2 * B) * (L * qm**2 + M * qm * pp) * r_mixed)
    w = (A / (8 * B) * (2 * L * qm * (1 - pp) + M * (1 - pp**2 + qm * qp)) * r_plus
         - A / (8 * B) * (2 * L * qm * (1 + pp) - M * (1 - pp**2 + qm * qp)) * r_minus
         + A / (4 * B) * (2 * L * qm * pp + M * (1 + pp**2 - qm * qp)) * r_mixed)
    return MomentCurve(times, _realify("u", u), _realify("v", v), _realify("w", w), sd)


def second_moments(p: SystemParams, t: float, strict: bool = False,
                   growth_limit: float = GROWTH_LIMIT) -> MomentState:
    curve = moment_curve(p, [t], strict=strict, growth_limit=growth_limit)
    return curve.state(0)


def quadrature_variances(m) -> QuadratureVariances:
    """Two-mode quadrature variances 1 + u + v -+ 2w; below 1 means squeezed.

    Accepts a MomentState or a MomentCurve (then returns arrays).
    """
    base = 1.0 + m.u + m.v
    return QuadratureVariances(base - 2.0 * m.w, base + 2.0 * m.w)


def mean_photon_pairs(m):
    """Mean photon-pair number (u + v) / 2; total intensity is twice this."""
    return 0.5 * (m.u + m.v)


def is_squeezed(dc_sq) -> bool:
    return dc_sq < 1.0
