"""Shared high-precision oracle and strategies.

The mpmath oracle rebuilds the drift from the raw parameters and solves the
moment equations exactly with a matrix exponential, so it shares no code
with the closed form or the RK4 engine.
"""
import mpmath as mp
import pytest
from hypothesis import strategies as st

from celsim import SystemParams

mp.mp.dps = 40


def mp_drift(p: SystemParams):
    """(2x2 drift on (alpha, beta*), d_aa, d_ab) at 40 digits."""
    A, k, O, g, G, th = (mp.mpf(x) for x in (p.A, p.kappa, p.Omega, p.gamma, p.Gamma, p.theta))
    z, zp, chi, e = O / g, O / G, g / G, mp.exp(-th)
    B = (4 + z**2) * (1 + zp * z)
    D, E = (2 * zp + z) * e, (2 - zp * z) * e
    coh, split = zp * (1 + zp * z), zp**2 + chi
    M = mp.matrix([[-(B * k + A * (D - 2 * split)) / (2 * B), A * (coh - E) / (2 * B)],
                   [A * (coh + E) / (2 * B), -(B * k + A * (D + 2 * split)) / (2 * B)]])
    d_aa = A / B * (2 * split - D)
    d_ab = A / (2 * B) * (coh + E)
    return M, d_aa, d_ab


def mp_moments(p: SystemParams, t: float):
    """Exact (u, v, w) at t from the vacuum: expm of the augmented affine system."""
    M, d_aa, d_ab = mp_drift(p)
    ea, xa, xb, eb = -M[0, 0], M[0, 1], M[1, 0], -M[1, 1]
    aug = mp.zeros(4, 4)
    aug[0, 0], aug[0, 2], aug[0, 3] = -2 * ea, 2 * xa, d_aa
    aug[1, 1], aug[1, 2] = -2 * eb, 2 * xb
    aug[2, 0], aug[2, 1], aug[2, 2], aug[2, 3] = xb, xa, -(ea + eb), d_ab
    X = mp.expm(aug * mp.mpf(t))
    return float(X[0, 3]), float(X[1, 3]), float(X[2, 3])


def mp_rates(p: SystemParams):
    """Eigenvalues of minus the drift, sorted as (mu_+, mu_-) by real part."""
    M, _, _ = mp_drift(p)
    ev = mp.eig(-M, left=False, right=False)
    ev = sorted(ev, key=lambda z: (mp.re(z), mp.im(z)), reverse=True)
    return complex(ev[0]), complex(ev[1])


@st.composite
def system_params(draw, max_A=20.0, max_Omega=20.0):
    A = draw(st.floats(0.0, max_A))
    kappa = draw(st.floats(0.0, 2.0))
    Omega = draw(st.one_of(st.floats(0.0, max_Omega), st.floats(1e-3, 1.0)))
    gamma = draw(st.floats(0.05, 5.0))
    Gamma = draw(st.floats(0.05, 5.0))
    theta = draw(st.one_of(st.just(0.0), st.floats(0.0, 3.0)))
    return SystemParams(A, kappa, Omega, gamma, Gamma, theta)


@pytest.fixture
def fig1_A10():
    return SystemParams(A=10.0, kappa=0.5, Omega=0.5, gamma=1.0, Gamma=1.0, theta=0.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
