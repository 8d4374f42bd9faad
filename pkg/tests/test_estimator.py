import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from scout.estimator import ScoutSolver, resolve_problem, validate_positive
from scout.exceptions import ConfigurationError
from scout.metrics import convergence_study
from scout.problems import get_problem
from scout.steppers import SchemeConfig


def test_params_roundtrip_and_clone():
    est = ScoutSolver("test5", scheme="classic-sl", n_cells=64, cfl=3.0)
    params = est.get_params()
    assert params["problem"] == "test5" and params["cfl"] == 3.0
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(n_cells=32)
    assert est.n_cells == 64


def test_fit_matches_convergence_study():
    est = ScoutSolver("test1", n_cells=100, cfl=10).fit()
    row = convergence_study(get_problem("test1"), SchemeConfig(cfl=10), [100])[0]
    assert est.l1_error_ == pytest.approx(row.l1_error, rel=1e-14)
    assert est.mass_delta_ <= 1e-12
    assert est.score() == -est.l1_error_
    np.testing.assert_allclose(est.predict(est.grid_.centers), est.solution_)


def test_predict_wraps_periodic_and_rejects_outside_dirichlet():
    per = ScoutSolver("test2", n_cells=40).fit()
    x = np.array([-0.31, 0.12])  # off-interface: R jumps at interfaces
    np.testing.assert_allclose(per.predict(x + 2.0), per.predict(x), atol=1e-14)
    dir_ = ScoutSolver("test1", n_cells=40).fit()
    with pytest.raises(ConfigurationError):
        dir_.predict([1.5])


def test_fit_with_custom_initial_values():
    est = ScoutSolver("test2", n_cells=20).fit(np.full((20, 1), 0.3))
    np.testing.assert_allclose(est.solution_, 0.3, atol=1e-13)
    with pytest.raises(ConfigurationError):
        ScoutSolver("test2", n_cells=20).fit(np.zeros(7))


def test_not_fitted_and_no_exact_solution():
    with pytest.raises(NotFittedError):
        ScoutSolver().predict([0.0])
    est = ScoutSolver("test7", n_cells=50).fit()
    assert est.l1_error_ is None
    with pytest.raises(ConfigurationError):
        est.score()


@pytest.mark.parametrize("kwargs", [dict(scheme="weno"), dict(n_cells=1), dict(n_cells=2.5),
                                    dict(cfl=-1.0), dict(nu=-0.1), dict(t_end=0.0),
                                    dict(limiter="superbee"), dict(problem=42)])
def test_invalid_params(kwargs):
    with pytest.raises(ConfigurationError):
        ScoutSolver(**kwargs).fit()


def test_validation_helpers():
    assert validate_positive("n", 3, integer=True) == 3
    assert validate_positive("x", None, allow_none=True) is None
    with pytest.raises(ConfigurationError):
        validate_positive("flag", True)
    assert resolve_problem(get_problem("test4")).name == "test4"
