import numpy as np
import pytest
from hypothesis import settings

from scout.mesh import BoundaryPolicy, Field, build_grid, extend
from scout.reconstruction import build_reconstruction

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def make_recon(values, a=0.0, b=1.0, bc=None, ghosts=4, t=0.0, limiter="none"):
    values = np.asarray(values, dtype=float)
    grid = build_grid(a, b, values.size)
    bc = bc or BoundaryPolicy.periodic()
    return build_reconstruction(extend(Field(values, t), grid, bc, ghosts, t), limiter)


@pytest.fixture
def unit_grid():
    return build_grid(0.0, 1.0, 10)
