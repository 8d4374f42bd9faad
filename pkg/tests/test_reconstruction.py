import numpy as np
import pytest
from hypothesis import given, strategies as st

from scout.mesh import BoundaryPolicy
from scout.reconstruction import minmod

from conftest import make_recon


def test_central_slopes_and_values():
    recon = make_recon([0.0, 1.0, 4.0, 9.0], ghosts=1)
    # storage index 2 is cell 1; slope (q2 - q0) / 2
    assert recon.slopes[2] == pytest.approx(2.0)
    x1 = 0.375
    assert recon.evaluate(x1) == pytest.approx(1.0)
    assert recon.evaluate(x1 + 0.125) == pytest.approx(1.0 + 2.0 * 0.5)


def test_interface_belongs_to_lower_cell():
    recon = make_recon([0.0, 0.0, 1.0, 1.0], ghosts=2, bc=BoundaryPolicy.dirichlet(
        lambda x, t: (np.asarray(x) > 0.5).astype(float)))
    # cell 1 has slope (1 - 0) / 2, so its right edge value is 0.25
    assert recon.evaluate(0.5) == pytest.approx(0.25)
    assert recon.evaluate(0.5 + 1e-12) == pytest.approx(0.75)


def test_minmod():
    np.testing.assert_array_equal(minmod(np.array([1.0, -2.0, 1.0, 0.0]),
                                         np.array([3.0, -1.0, -1.0, 2.0])), [1.0, -1.0, 0.0, 0.0])


def test_minmod_limiter_flattens_extrema():
    recon = make_recon([0.0, 1.0, 0.0, 1.0, 2.0, 3.0], limiter="minmod", ghosts=1)
    assert recon.slopes[2] == 0.0  # local max at cell 1
    assert recon.slopes[5] == pytest.approx(1.0)


def test_unknown_limiter():
    with pytest.raises(ValueError):
        make_recon([0.0, 1.0], limiter="superbee")


def test_edge_values_and_range():
    recon = make_recon([0.0, 2.0, 4.0, 2.0], ghosts=1)
    lo, hi = recon.edge_values()
    np.testing.assert_allclose(hi - lo, recon.slopes)
    vmin, vmax = recon.value_range()
    assert vmin <= 0.0 and vmax >= 4.0


@given(m=st.floats(-50, 50), c=st.floats(-50, 50), a=st.floats(-10, 10),
       width=st.floats(0.1, 10), n=st.integers(3, 60), u=st.floats(0, 1))
def test_affine_data_reproduced_exactly(m, c, a, width, n, u):
    def affine(x, t=0.0):
        return m * np.asarray(x) + c

    grid_x = a + (np.arange(n) + 0.5) * width / n
    recon = make_recon(affine(grid_x), a, a + width, BoundaryPolicy.dirichlet(affine), ghosts=3)
    lo, hi = recon.extended.left_edge + width / n, recon.extended.right_edge - width / n
    x = np.linspace(lo, hi, 37) * (1 - u) + u * lo
    scale = abs(m) * (abs(a) + 2 * width) + abs(c) + 1
    assert np.max(np.abs(recon.evaluate(x) - affine(x))) <= 64 * np.finfo(float).eps * scale
