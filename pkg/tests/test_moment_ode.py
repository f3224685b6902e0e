import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from celsim import (NumericalInstability, SingularDrift, StepTooLarge, SystemParams, derive,
                    drift_diffusion, integrate_moments, moment_curve, second_moments,
                    spectral, steady_state)
from celsim.moment_ode import STEP_GUARD, diffusion_vector, moment_matrix, moment_rhs
from celsim.rk4 import check_grid, linear_rk4_map, rk4_step, substeps
from celsim.verify import ORDER_RANGE, convergence_order

FIG1 = dict(kappa=0.5, Omega=0.5, gamma=1.0, Gamma=1.0, theta=0.0)
THRESHOLD_A = 6.783186487605389


def dd_of(p):
    return drift_diffusion(derive(p), p)


def test_moment_matrix_layout():
    p = SystemParams(A=10, **FIG1)
    dd = dd_of(p)
    K = moment_matrix(dd)
    assert K[0, 0] == -2 * dd.eta_a and K[0, 2] == 2 * dd.xi_a and K[0, 1] == 0
    assert K[1, 1] == -2 * dd.eta_b and K[1, 2] == 2 * dd.xi_b and K[1, 0] == 0
    assert tuple(K[2]) == (dd.xi_b, dd.xi_a, -(dd.eta_a + dd.eta_b))
    assert tuple(diffusion_vector(dd)) == (dd.d_aa, 0.0, dd.d_ab)
    x = np.array([0.3, 0.2, 0.1])
    np.testing.assert_allclose(moment_rhs(dd)(0.0, x), K @ x + diffusion_vector(dd))


@pytest.mark.parametrize("A", [5.0, 10.0, 15.0])
def test_fig1_full_grid(A):
    p = SystemParams(A=A, **FIG1)
    t = np.linspace(0, 5, 512)
    traj = integrate_moments(dd_of(p), t, 1e-4)
    c = moment_curve(p, t)
    for key in "uvw":
        np.testing.assert_allclose(getattr(traj, key), getattr(c, key), rtol=1e-6, atol=0)
    assert traj.order == 4 and traj.dt == 1e-4
    assert traj.states[0].u == 0.0


@pytest.mark.parametrize("A", [5.0, 10.0, 15.0])
def test_convergence_order(A):
    slope, steps, errors = convergence_order(SystemParams(A=A, **FIG1))
    assert ORDER_RANGE[0] <= slope <= ORDER_RANGE[1]
    # halving the step cuts the error by about 16
    assert errors[0] / errors[-1] == pytest.approx((steps[0] / steps[-1]) ** 4, rel=0.2)


def test_step_guard():
    dd = dd_of(SystemParams(A=10, **FIG1))
    dt = 1.01 * STEP_GUARD / dd.max_rate()
    with pytest.raises(StepTooLarge):
        integrate_moments(dd, [1.0], dt)
    integrate_moments(dd, [1.0], 0.99 * STEP_GUARD / dd.max_rate())
    with pytest.raises(ValueError):
        integrate_moments(dd, [1.0], 0.0)


def test_grid_not_multiple_of_dt():
    p = SystemParams(A=5, **FIG1)
    t = [0.3, 0.77, 1.234567]
    traj = integrate_moments(dd_of(p), t, 1e-3)
    np.testing.assert_allclose(traj.u, moment_curve(p, t).u, rtol=1e-10)
    np.testing.assert_array_equal(traj.times, t)


def test_start_from_state():
    p = SystemParams(A=5, **FIG1)
    dd = dd_of(p)
    whole = integrate_moments(dd, [1.0, 2.0], 1e-3)
    first = whole.states[0]
    rest = integrate_moments(dd, [1.0], 1e-3, x0=(first.u, first.v, first.w))
    assert rest.u[0] == pytest.approx(whole.u[1], rel=1e-12)


def test_steady_state_below_threshold():
    p = SystemParams(A=5, **FIG1)
    ss = steady_state(dd_of(p))
    # slowest decay is exp(-mu_- t) from the mixed term
    t_long = 20.0 / spectral(derive(p), p).mu_minus
    m = second_moments(p, t_long)
    assert (ss.u, ss.v, ss.w) == pytest.approx((m.u, m.v, m.w), rel=1e-8)
    traj = integrate_moments(dd_of(p), [t_long], 1e-2)
    assert (ss.u, ss.v, ss.w) == pytest.approx((traj.u[0], traj.v[0], traj.w[0]), rel=1e-7)


def test_steady_state_at_threshold():
    with pytest.raises(SingularDrift):
        steady_state(dd_of(SystemParams(A=THRESHOLD_A, **FIG1)))


def test_steady_state_above_threshold():
    with pytest.raises(NumericalInstability):
        steady_state(dd_of(SystemParams(A=10, **FIG1)))


def test_rk4_step_exact_for_cubic():
    # RK4 integrates y' = 3 t^2 exactly
    y = rk4_step(lambda t, y: 3 * t**2, 0.5, 0.125, 0.25)
    assert y == pytest.approx(0.75**3, rel=1e-15)


@settings(max_examples=50)
@given(st.floats(1e-3, 0.2), st.integers(0, 2**32 - 1))
def test_linear_map_equals_generic_step(h, seed):
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(3, 3))
    d = rng.normal(size=3)
    x = rng.normal(size=3)
    P, q = linear_rk4_map(K, d, h)
    np.testing.assert_allclose(P @ x + q, rk4_step(lambda t, y: K @ y + d, 0.0, x, h),
                               rtol=1e-12, atol=1e-14)


def test_substeps():
    assert substeps(0.0, 0.1) == (0, 0.0)
    n, h = substeps(1.0, 0.3)
    assert n == 4 and h == 0.25
    n, h = substeps(1.0, 0.25)
    assert n == 4 and h == 0.25


@pytest.mark.parametrize("grid", [[], [-1.0, 0.0], [0.0, 0.0], [1.0, 0.5], [[0.0, 1.0]]])
def test_bad_grids(grid):
    with pytest.raises(ValueError):
        check_grid(grid)
