import numpy as np
import pytest

from scout.characteristics import ConstantVelocity
from scout.exceptions import ConfigurationError, CoverageError, LinearSolverError
from scout.mesh import BoundaryPolicy, Field, build_grid
from scout.problems import ProblemSpec, get_problem
from scout.steppers import (SchemeConfig, TridiagonalSystem, alpha_at_foot, alpha_interfaces,
                            cfl_timestep, cyclic_thomas_solve, reconstruct_for_step,
                            reference_evaluator, run, slcn_rhs, step, thomas_solve)


def _heat(nu=0.05, n=32, u=0.0, t_end=0.2):
    def q0(x):
        return np.sin(2 * np.pi * np.asarray(x))
    return ProblemSpec("heat", ConstantVelocity(u), (0.0, 1.0), t_end, q0,
                       BoundaryPolicy.periodic(), nu=nu, cfl=10.0)


@pytest.mark.parametrize("kwargs", [dict(scheme="upwind"), dict(cfl=0.0), dict(nu=-1.0),
                                    dict(limiter="vanleer"), dict(max_iter=0)])
def test_scheme_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SchemeConfig(**kwargs)


def test_thomas_known_system():
    x_true = np.array([1.0, 2.0, 3.0, 4.0])
    system = TridiagonalSystem.diffusion(4, 1.0, np.zeros(4))
    rhs = system.dense() @ x_true
    np.testing.assert_allclose(thomas_solve(TridiagonalSystem(system.sub, system.diag,
                                                              system.sup, rhs)), x_true)
    crhs = system.dense(cyclic=True) @ x_true
    np.testing.assert_allclose(cyclic_thomas_solve(TridiagonalSystem(system.sub, system.diag,
                                                                     system.sup, crhs)), x_true)


def test_thomas_zero_pivot():
    with pytest.raises(LinearSolverError):
        thomas_solve(TridiagonalSystem(np.zeros(3), np.array([0.0, 1, 1]), np.zeros(3), np.ones(3)))


def test_cfl_timestep_rules():
    problem = get_problem("test1")
    grid = build_grid(-1, 1, 100)
    f = Field(np.ones(100))
    assert cfl_timestep(f, problem, grid, 10, 0.0, 1.0) == pytest.approx(0.2)
    assert cfl_timestep(f, problem, grid, 10, 0.9, 1.0) == pytest.approx(0.1)
    with pytest.raises(ConfigurationError):
        cfl_timestep(f, problem, grid, 0, 0.0, 1.0)
    still = _heat(u=0.0)
    assert cfl_timestep(Field(np.ones(32)), still, build_grid(0, 1, 32), 5, 0.0, 0.2) == 0.2
    # variable-velocity problem scales the speed by max|q|
    p3 = get_problem("test3")
    g3 = build_grid(0, 2 * np.pi, 50)
    speed = np.max(np.abs(np.sin(g3.centers))) * 2.0
    assert cfl_timestep(Field(np.full(50, 2.0)), p3, g3, 20, 0.0, 10.0) == \
        pytest.approx(20 * g3.dx / speed)


def test_ghost_width_covers_reach():
    problem = get_problem("test5")
    grid = build_grid(0, 2, 50)
    f = Field(problem.initial(grid.centers))
    dt = 100 * grid.dx / 1.71
    recon = reconstruct_for_step(f, grid, problem.boundary, problem.velocity, dt)
    assert recon.extended.ghost_width >= np.ceil(1.71 * dt / grid.dx) + 3


def test_alpha_interpolation_exact_for_quadratics():
    def quad(x, t=0.0):
        return np.asarray(x) ** 2
    grid = build_grid(0.0, 1.0, 20)
    alpha = alpha_interfaces(Field(quad(grid.centers)), grid, BoundaryPolicy.dirichlet(quad))
    # differences of x^2 are exact gradients at the midpoints (the interfaces)
    np.testing.assert_allclose(alpha, 2 * grid.interfaces, atol=1e-12)
    y = np.array([0.0, 0.123, 0.77, 1.0])
    np.testing.assert_allclose(alpha_at_foot(alpha, grid, y), 2 * y, atol=1e-12)
    with pytest.raises(CoverageError):
        alpha_at_foot(alpha, grid, [1.2])


def test_slcn_rhs_adds_exact_diffusion_of_quadratic():
    def quad(x, t=0.0):
        return np.asarray(x) ** 2
    grid = build_grid(0.0, 1.0, 20)
    f = Field(quad(grid.centers))
    bc = BoundaryPolicy.dirichlet(quad)
    h = np.linspace(0, 1, 21)
    feet = grid.interfaces - 0.137
    nu, dt = 0.3, 0.05
    b = slcn_rhs(f, grid, bc, dt, feet, h, nu)
    advected = f.values - np.diff(h) / grid.dx
    np.testing.assert_allclose(slcn_rhs(f, grid, bc, dt, feet, h, 0.0), advected)
    # nu dt / (2 dx) * (2 y_{i+1/2} - 2 y_{i-1/2}) = nu dt
    np.testing.assert_allclose(b - advected, nu * dt, atol=1e-12)


@pytest.mark.parametrize("scheme", ["scout-slcn", "scout-cn"])
def test_pure_diffusion_matches_crank_nicolson_amplification(scheme):
    problem = _heat()
    n = 32
    grid = build_grid(0, 1, n)
    res = run(problem, n, SchemeConfig(scheme, cfl=10.0), initial=Field(
        problem.initial(grid.centers)))
    dt = res.dt_history
    assert np.all(dt > 0)
    theta = 2 * np.pi * grid.dx
    amp = 1.0
    for d in dt:
        r = problem.nu * d / (2 * grid.dx ** 2)
        amp *= (1 - 2 * r * (1 - np.cos(theta))) / (1 + 2 * r * (1 - np.cos(theta)))
    np.testing.assert_allclose(res.final.values, amp * np.sin(2 * np.pi * grid.centers),
                               atol=1e-13)


def test_classic_sl_integer_shift_is_exact():
    problem = ProblemSpec("shift", ConstantVelocity(1.0), (0.0, 1.0), 0.25,
                          lambda x: np.cos(2 * np.pi * np.asarray(x)), BoundaryPolicy.periodic())
    res = run(problem, 40, SchemeConfig("classic-sl", cfl=5.0))
    grid = res.grid
    np.testing.assert_allclose(res.final.values, np.cos(2 * np.pi * (grid.centers - 0.25)),
                               atol=1e-13)


def test_run_hits_final_and_snapshot_times():
    problem = get_problem("test1")
    res = run(problem, 50, SchemeConfig(), snapshot_times=[0.33, 0.5, 7.0])
    assert res.final.time == 1.0
    assert [s.time for s in res.snapshots] == [0.33, 0.5]
    assert res.n_steps == len(res.dt_history)
    assert res.dt_history.sum() == pytest.approx(1.0)


def test_burgers_linear_data_exact_to_roundoff():
    problem = get_problem("test4")
    res = run(problem, 100, SchemeConfig(cfl=10.0))
    exact = problem.exact(res.grid.centers, 0.2)
    assert np.max(np.abs(res.final.values - exact)) <= 1e-10


def test_scout_with_viscosity_uses_feet_diffusion():
    problem = _heat(u=0.7)
    grid = build_grid(0, 1, 32)
    f = Field(problem.initial(grid.centers))
    a, _ = step(f, grid, problem.boundary, problem, 0.05, SchemeConfig("scout"))
    b, _ = step(f, grid, problem.boundary, problem, 0.05, SchemeConfig("scout-slcn"))
    np.testing.assert_array_equal(a.values, b.values)
    c, _ = step(f, grid, problem.boundary, problem, 0.05, SchemeConfig("scout", nu=0.0))
    assert not np.allclose(a.values, c.values)


def test_step_report_contents():
    problem = get_problem("test5")
    grid = build_grid(0, 2, 50)
    f = Field(problem.initial(grid.centers))
    _, rep = step(f, grid, problem.boundary, problem, 0.1, SchemeConfig())
    assert rep.dt_used == 0.1
    assert rep.max_speed == pytest.approx(np.max(np.abs(f.values)))
    assert rep.newton_iters_total > 0
    assert rep.max_crossed >= 4


def test_reference_evaluator():
    problem = get_problem("test5-shock")
    ref = reference_evaluator(problem, recipe=type(problem.reference)(100, "scout-slcn"))
    x = ref.grid.centers
    np.testing.assert_allclose(ref(x), ref.values)
    assert ref(np.array([x[0] + 2.0]))[0] == pytest.approx(ref.values[0])  # periodic
    with pytest.raises(ConfigurationError):
        ref(x, 0.1)
    with pytest.raises(ConfigurationError):
        reference_evaluator(get_problem("test1"))
