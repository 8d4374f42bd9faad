import numpy as np
import pytest

from scout.exceptions import ConfigurationError, CoverageError
from scout.mesh import BoundaryPolicy, Field, Grid1D, build_grid, extend


def test_geometry(unit_grid):
    assert unit_grid.dx == pytest.approx(0.1)
    np.testing.assert_allclose(unit_grid.centers, np.arange(10) * 0.1 + 0.05)
    np.testing.assert_allclose(unit_grid.interfaces, np.linspace(0, 1, 11))
    assert unit_grid.length == 1.0


def test_cell_index_interior_and_ties(unit_grid):
    assert unit_grid.cell_index(0.05) == 0
    assert unit_grid.cell_index(0.95) == 9
    # a point on interface k belongs to the lower cell k-1
    assert unit_grid.cell_index(0.5) == 4
    assert unit_grid.cell_index(0.0) == -1
    np.testing.assert_array_equal(unit_grid.cell_index([-0.05, 1.05]), [-1, 10])


@pytest.mark.parametrize("a,b,n", [(1.0, 1.0, 10), (0.0, 1.0, 1), (0.0, 1.0, 2.5)])
def test_invalid_grid(a, b, n):
    with pytest.raises(ConfigurationError):
        Grid1D(a, b, n)


def test_periodic_ghosts_wrap(unit_grid):
    q = np.arange(10.0)
    ext = extend(Field(q), unit_grid, BoundaryPolicy.periodic(), 3)
    np.testing.assert_array_equal(ext.left_ghosts, [7, 8, 9])
    np.testing.assert_array_equal(ext.right_ghosts, [0, 1, 2])
    np.testing.assert_array_equal(ext.interior, q)
    assert ext.left_edge == pytest.approx(-0.3)
    assert ext.right_edge == pytest.approx(1.3)


def test_dirichlet_ghosts_use_evaluator_at_ghost_centres(unit_grid):
    calls = []

    def evaluator(x, t):
        calls.append(t)
        return 10 * np.asarray(x) + t

    ext = extend(Field(np.zeros(10), 0.5), unit_grid, BoundaryPolicy.dirichlet(evaluator), 2)
    np.testing.assert_allclose(ext.left_ghosts, [10 * -0.15 + 0.5, 10 * -0.05 + 0.5])
    np.testing.assert_allclose(ext.right_ghosts, [10 * 1.05 + 0.5, 10 * 1.15 + 0.5])
    assert calls == [0.5, 0.5]
    ext = extend(Field(np.zeros(10), 0.5), unit_grid, BoundaryPolicy.dirichlet(evaluator), 1, t=2.0)
    assert ext.left_ghosts[0] == pytest.approx(-0.5 + 2.0)


def test_boundary_errors(unit_grid):
    with pytest.raises(ConfigurationError):
        BoundaryPolicy("dirichlet")
    with pytest.raises(ConfigurationError):
        BoundaryPolicy("reflective")
    with pytest.raises(ConfigurationError):
        extend(Field(np.zeros(10)), unit_grid, BoundaryPolicy.periodic(), 0)
    with pytest.raises(ConfigurationError):
        extend(Field(np.zeros(9)), unit_grid, BoundaryPolicy.periodic(), 1)


def test_local_index_coverage(unit_grid):
    ext = extend(Field(np.zeros(10)), unit_grid, BoundaryPolicy.periodic(), 2)
    assert ext.local_index(0.05) == 2
    assert ext.local_index(-0.19) == 0
    with pytest.raises(CoverageError):
        ext.local_index(-0.25)
    with pytest.raises(CoverageError):
        ext.local_index([0.5, 1.3])


def test_field_validation():
    f = Field([1, 2, 3], 0.25)
    assert len(f) == 3 and f.values.dtype == float
    g = f.copy()
    g.values[0] = 9
    assert f.values[0] == 1
    assert not Field([1.0, np.nan]).is_finite()
    with pytest.raises(ValueError):
        Field(np.zeros((2, 2)))
