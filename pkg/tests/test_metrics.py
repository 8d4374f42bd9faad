import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scout.exceptions import ConfigurationError, FootSolverError, ScoutError
from scout.mesh import BoundaryPolicy, Field, build_grid
from scout.metrics import (convergence_study, l1_error, mass, mass_delta, observed_order,
                           observed_orders, shock_midpoint)
from scout.problems import get_problem
from scout.steppers import SchemeConfig, SimulationResult


def test_point_l1_of_constant_offset():
    grid = build_grid(0.0, 2.0, 40)
    ref = lambda x, t: np.sin(np.asarray(x))
    f = Field(np.sin(grid.centers) + 0.25)
    assert l1_error(f, ref, grid, kind="point") == pytest.approx(0.5)


def test_reconstruction_l1_zero_for_linear_data():
    ref = lambda x, t: 2.0 * np.asarray(x) - 1.0
    grid = build_grid(0.0, 1.0, 16)
    f = Field(ref(grid.centers, 0.0))
    assert l1_error(f, ref, grid) <= 1e-15
    # periodic closure: a sine sampled at centres has an O(dx^2) reconstruction error
    sine = lambda x, t: np.sin(2 * np.pi * np.asarray(x))
    e1 = l1_error(Field(sine(grid.centers, 0)), sine, grid, bc=BoundaryPolicy.periodic())
    g2 = build_grid(0.0, 1.0, 32)
    e2 = l1_error(Field(sine(g2.centers, 0)), sine, g2, bc=BoundaryPolicy.periodic())
    assert math.log2(e1 / e2) == pytest.approx(2.0, abs=0.1)


def test_l1_kind_validation():
    grid = build_grid(0.0, 1.0, 4)
    with pytest.raises(ConfigurationError):
        l1_error(Field(np.zeros(4)), lambda x, t: x, grid, kind="max")
    with pytest.raises(ConfigurationError):
        mass(Field(np.zeros(4)), grid, kind="l2")


def test_mass_signed_and_abs():
    grid = build_grid(0.0, 1.0, 4)
    f0, f1 = Field([1.0, -1.0, 2.0, 0.0]), Field([0.0, 0.0, 2.0, 0.0])
    assert mass(f0, grid) == pytest.approx(0.5)
    assert mass(f0, grid, "abs") == pytest.approx(1.0)
    assert mass_delta(f0, f1, grid) == pytest.approx(0.0)
    assert mass_delta(f0, f1, grid, "abs") == pytest.approx(0.5)


@given(seed=st.integers(0, 2 ** 32 - 1), shift=st.integers(0, 63))
def test_mass_delta_invariant_under_rotation(seed, shift):
    rng = np.random.default_rng(seed)
    grid = build_grid(0.0, 1.0, 64)
    a, b = Field(rng.normal(size=64)), Field(rng.normal(size=64))
    rolled = mass_delta(a, Field(np.roll(b.values, shift)), grid)
    assert rolled == pytest.approx(mass_delta(a, b, grid), abs=1e-15)


def test_observed_orders():
    assert observed_order(4e-3, 1e-3) == pytest.approx(2.0)
    assert math.isnan(observed_order(0.0, 1.0))
    out = observed_orders([8.0, 4.0, 1.0])
    assert out[0] is None and out[1:] == pytest.approx([1.0, 2.0])


def _fake_runner(errors):
    def runner(problem, n, config):
        grid = build_grid(*problem.domain, n)
        if n in errors and errors[n] is None:
            raise FootSolverError("synthetic failure")
        exact = problem.exact(grid.centers, problem.t_end)
        final = Field(exact + errors.get(n, 0.0) / grid.length, problem.t_end)
        return SimulationResult(grid, Field(exact, problem.t_start), final)
    return runner


def test_convergence_study_orders_and_failures():
    problem = get_problem("test2")
    rows = convergence_study(problem, SchemeConfig(), [10, 20, 40, 80],
                             l1_kind="point", runner=_fake_runner({10: 4e-2, 20: 1e-2, 40: None,
                                                                   80: 6.25e-4}))
    assert [r.n_cells for r in rows] == [10, 20, 40, 80]
    assert rows[0].l1_order is None
    assert rows[1].l1_order == pytest.approx(2.0)
    assert rows[2].failed and "synthetic" in rows[2].message
    assert rows[3].l1_order is None  # neighbour failed
    assert rows[3].l1_error == pytest.approx(6.25e-4)


def test_single_resolution_has_no_order():
    rows = convergence_study(get_problem("test1"), SchemeConfig(), [50])
    assert len(rows) == 1 and rows[0].l1_order is None and not rows[0].failed


def test_study_needs_reference():
    with pytest.raises(ConfigurationError):
        convergence_study(get_problem("test7"), SchemeConfig(), [50])


def test_shock_midpoint_on_symmetric_front():
    x = np.linspace(-1, 1, 201)
    q = 0.75 - 0.25 * np.tanh((x - 0.3) / 0.02)
    # window estimates of the states are close to, not exactly, 1 and 0.5
    assert shock_midpoint(x, q) == pytest.approx(0.3, abs=1e-5)
    assert shock_midpoint(x, q, states=(1.0, 0.5)) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(ScoutError):
        shock_midpoint(x, np.ones_like(x), states=(1.0, 0.5))
    with pytest.raises(ConfigurationError):
        shock_midpoint(x[:2], q[:2])
