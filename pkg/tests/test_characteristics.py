import numpy as np
import pytest
from hypothesis import given, strategies as st

from scout.acceptance import foot_contract_holds
from scout.characteristics import (BURGERS, ConstantVelocity, FootMethod, NonlinearFlux,
                                   SpaceTimeVelocity, count_crossed, foot_constant, foot_newton,
                                   foot_residual, foot_rk2, trace_feet, upwind_sign)
from scout.exceptions import ConfigurationError
from scout.mesh import BoundaryPolicy, build_grid

from conftest import make_recon


def test_constant_foot_and_diagnostics(unit_grid):
    res = foot_constant(0.55, 1.0, 0.5, unit_grid)
    assert res.x_foot == pytest.approx(0.05)
    assert res.lam == 1
    assert res.method == FootMethod.EXACT
    assert res.crossed_interfaces == 5  # 0.1 .. 0.5


def test_upwind_sign_and_crossings(unit_grid):
    np.testing.assert_array_equal(upwind_sign([0.5, 0.5, 0.5], [0.2, 0.5, 0.9]), [1, 0, -1])
    # endpoints sitting on interfaces are not counted
    np.testing.assert_array_equal(count_crossed(unit_grid, np.array([0.5, 0.5]),
                                                np.array([0.2, 0.45])), [2, 0])


def test_negative_dt_rejected():
    with pytest.raises(ValueError):
        foot_constant(0.0, 1.0, -0.1)


@given(x=st.floats(-5, 5), t_new=st.floats(0, 3), dt=st.floats(0, 1))
def test_rk2_exact_for_velocity_linear_in_time(x, t_new, dt):
    # dy/ds = -(t_new - s) integrates to x - dt t_new + dt^2 / 2
    res = foot_rk2(x, lambda y, t: np.full_like(np.asarray(y, float), t), t_new, dt)
    assert res.x_foot == pytest.approx(x - dt * t_new + dt ** 2 / 2, abs=1e-13)


def test_rk2_heun_stages_for_linear_velocity():
    # u = y: Heun gives x (1 - dt + dt^2 / 2)
    res = foot_rk2(np.array([0.3, -1.0]), lambda y, t: np.asarray(y), 1.0, 0.2)
    np.testing.assert_allclose(res.x_foot, np.array([0.3, -1.0]) * (1 - 0.2 + 0.02))
    assert np.all(res.method == FootMethod.RK2)


def _linear_recon(alpha, beta, n=40, a=-2.0, b=2.0):
    def lin(x, t=0.0):
        return alpha + beta * np.asarray(x)
    grid = build_grid(a, b, n)
    return make_recon(lin(grid.centers), a, b, BoundaryPolicy.dirichlet(lin), ghosts=40)


@pytest.mark.parametrize("alpha,beta,dt", [(0.5, 0.3, 0.4), (-1.0, 1.0, 0.2), (0.2, -0.5, 1.0)])
def test_newton_matches_linear_data_closed_form(alpha, beta, dt):
    recon = _linear_recon(alpha, beta)
    x = np.linspace(-1, 1, 9)
    res = foot_newton(x, recon, BURGERS, dt)
    # y = x - (alpha + beta y) dt
    np.testing.assert_allclose(res.x_foot, (x - alpha * dt) / (1 + beta * dt), atol=1e-12)
    assert np.all(res.method == FootMethod.NEWTON)
    assert np.max(res.iterations) <= 3


def test_newton_scalar_and_zero_dt():
    recon = _linear_recon(0.5, 0.0)
    res = foot_newton(0.25, recon, BURGERS, 0.2)
    assert isinstance(res.x_foot, float)
    assert res.x_foot == pytest.approx(0.15)
    assert foot_newton(0.25, recon, BURGERS, 0.0).x_foot == 0.25


def test_flat_derivative_falls_back_to_bisection():
    dt, half = 2.0 ** -4, 0.25

    def ramp(x, t=0.0):
        return np.clip(-np.asarray(x) / dt, -half / dt, half / dt)

    grid = build_grid(-1.0, 1.0, 128)
    recon = make_recon(ramp(grid.centers), -1.0, 1.0, BoundaryPolicy.dirichlet(ramp), ghosts=160)
    x = np.array([0.05, 0.1, -0.1])  # guesses 2x stay on the ramp
    res = foot_newton(x, recon, BURGERS, dt)
    assert np.all(res.method == FootMethod.BISECTION)
    # g is flat on the ramp; the roots sit past its ends at x -/+ half
    np.testing.assert_allclose(res.x_foot, x + np.sign(x) * half, atol=1e-12)
    assert res.fallback_count == 3


@given(seed=st.integers(0, 2 ** 32 - 1), cfl=st.floats(0.1, 100))
def test_newton_residual_contract_on_random_data(seed, cfl):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=32) + rng.uniform(-1, 1)
    grid = build_grid(0.0, 1.0, 32)
    dt = cfl * grid.dx / max(1e-3, np.max(np.abs(q)))
    g = int(np.ceil(1.6 * np.max(np.abs(q)) * dt / grid.dx)) * 4 + 8
    recon = make_recon(q, ghosts=g)
    x = rng.uniform(0, 1, 50)
    res = foot_newton(x, recon, BURGERS, dt)
    tol = 1e-12 * np.maximum(1.0, np.abs(x))
    assert np.all(foot_contract_holds(res.x_foot, x, recon, BURGERS.fprime, dt, tol))
    # the returned foot never lies outside the bracket used by the solver
    half = np.max(np.abs(recon.values)) * 1.5 * dt + grid.dx
    assert np.all(np.abs(res.x_foot - x) <= 2 ** 6 * half)


def test_residual_definition():
    recon = _linear_recon(1.0, 0.0)
    assert foot_residual(0.3, 0.5, recon, BURGERS.fprime, 0.2) == pytest.approx(0.3 - 0.5 + 0.2)


def test_trace_feet_dispatch(unit_grid):
    x = unit_grid.interfaces
    assert np.all(trace_feet(ConstantVelocity(2.0), x, 0.1, 1.0).method == FootMethod.EXACT)
    vel = SpaceTimeVelocity(lambda y, t: np.ones_like(y), lambda y, t: np.zeros_like(y))
    np.testing.assert_allclose(trace_feet(vel, x, 0.1, 1.0).x_foot, x - 0.1)
    with pytest.raises(ValueError):
        trace_feet(BURGERS, x, 0.1, 1.0)
    with pytest.raises(TypeError):
        trace_feet(object(), x, 0.1, 1.0)


def test_burgers_flux_functions():
    q = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(BURGERS.f(q), q ** 2 / 2)
    np.testing.assert_allclose(BURGERS.fprime(q), q)
    np.testing.assert_allclose(BURGERS.fsecond(q), 1.0)
    assert isinstance(BURGERS, NonlinearFlux)
