"""Estimator-style front end: configure, ``fit`` (run), ``predict`` (sample)."""
from __future__ import annotations

import numbers
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigurationError
from .mesh import Field, extend
from .metrics import l1_error, mass_delta
from .problems import ProblemSpec, get_problem
from .reconstruction import LIMITERS, build_reconstruction
from .steppers import SCHEMES, SchemeConfig, run


def validate_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    return scheme


def validate_positive(name: str, value, integer: bool = False, allow_none: bool = False):
    if value is None and allow_none:
        return None
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0:
        what = "a positive integer" if integer else "a positive number"
        raise ConfigurationError(f"{name} must be {what}, got {value!r}")
    return value


def validate_non_negative(name: str, value, allow_none: bool = True):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or value < 0:
        raise ConfigurationError(f"{name} must be non-negative, got {value!r}")
    return value


def resolve_problem(problem: Union[str, ProblemSpec]) -> ProblemSpec:
    if isinstance(problem, ProblemSpec):
        return problem
    if isinstance(problem, str):
        return get_problem(problem)
    raise ConfigurationError(f"problem must be a name or ProblemSpec, got {type(problem).__name__}")


class ScoutSolver(BaseEstimator):
    """Run one benchmark to its final time and sample the result.

    Parameters
    ----------
    problem : str or ProblemSpec
        Catalogue name (see ``scout list``) or a problem object.
    scheme : {"scout", "scout-slcn", "scout-cn", "classic-sl"}
    n_cells : int
    cfl, nu, t_end : float, optional
        Overrides of the problem's own settings.
    limiter : {"none", "minmod"}
    entropy_selection : bool
        Resolve competing characteristic feet by the entropy rule.

    Attributes
    ----------
    problem_ : ProblemSpec
    result_ : SimulationResult
    grid_ : Grid1D
    l1_error_ : float or None
        Against the exact solution when one exists.
    mass_delta_ : float
    """

    def __init__(self, problem="test1", scheme="scout", n_cells=100, cfl=None, nu=None,
                 t_end=None, limiter="none", entropy_selection=True):
        self.problem = problem
        self.scheme = scheme
        self.n_cells = n_cells
        self.cfl = cfl
        self.nu = nu
        self.t_end = t_end
        self.limiter = limiter
        self.entropy_selection = entropy_selection

    def _validate_params(self):
        validate_scheme(self.scheme)
        validate_positive("n_cells", self.n_cells, integer=True)
        if self.n_cells < 2:
            raise ConfigurationError("n_cells must be at least 2")
        validate_positive("cfl", self.cfl, allow_none=True)
        validate_non_negative("nu", self.nu)
        validate_positive("t_end", self.t_end, allow_none=True)
        if self.limiter not in LIMITERS:
            raise ConfigurationError(f"unknown limiter {self.limiter!r}")

    def fit(self, X=None, y=None):
        """Advance the problem to its final time.

        Parameters
        ----------
        X : array-like of shape (n_cells,) or (n_cells, 1), optional
            Initial point values at the cell centres; sampled from the
            problem's initial data when omitted.
        y : ignored
        """
        self._validate_params()
        problem = resolve_problem(self.problem).with_overrides(nu=self.nu, t_end=self.t_end,
                                                               cfl=self.cfl)
        config = SchemeConfig(self.scheme, cfl=self.cfl, nu=self.nu, limiter=self.limiter,
                              entropy_selection=self.entropy_selection)
        initial = None
        if X is not None:
            q0 = check_array(X, ensure_2d=False, dtype=np.float64).reshape(-1)
            if q0.size != self.n_cells:
                raise ConfigurationError(f"X has {q0.size} values, expected {self.n_cells}")
            initial = Field(q0, problem.t_start)
        self.problem_ = problem
        self.config_ = config
        self.result_ = run(problem, self.n_cells, config, initial=initial)
        self.grid_ = self.result_.grid
        self.mass_delta_ = mass_delta(self.result_.initial, self.result_.final, self.grid_)
        self.l1_error_ = (None if problem.exact is None else
                          l1_error(self.result_.final, problem.exact, self.grid_,
                                   bc=problem.boundary))
        return self

    @property
    def solution_(self) -> np.ndarray:
        check_is_fitted(self, "result_")
        return self.result_.final.values

    def predict(self, X):
        """Evaluate the final piecewise-linear solution at coordinates ``X``."""
        check_is_fitted(self, "result_")
        x = check_array(X, ensure_2d=False, dtype=np.float64).reshape(-1)
        grid = self.grid_
        if self.problem_.boundary.is_periodic:
            x = grid.a + np.mod(x - grid.a, grid.length)
        elif np.any(x < grid.a) or np.any(x > grid.b):
            raise ConfigurationError(f"coordinates outside [{grid.a}, {grid.b}]")
        final = self.result_.final
        recon = build_reconstruction(extend(final, grid, self.problem_.boundary, 2, final.time),
                                     self.limiter)
        return recon.evaluate(x)

    def score(self, X=None, y=None) -> float:
        """Negative L1 error against the exact solution (larger is better)."""
        check_is_fitted(self, "result_")
        if self.l1_error_ is None:
            raise ConfigurationError(f"{self.problem_.name} has no exact solution")
        return -self.l1_error_
