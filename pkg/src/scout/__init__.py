"""Conservative semi-Lagrangian schemes for 1D advection-diffusion problems."""
__version__ = "0.1.0"

from .exceptions import (ConfigurationError, CoverageError, FootSolverError, LinearSolverError,
                         ScoutError)
from .mesh import BoundaryPolicy, Field, Grid1D, build_grid
from .problems import ProblemSpec, get_problem, problem_names
from .steppers import SCHEMES, SchemeConfig, SimulationResult, run
from .metrics import convergence_study, l1_error, mass_delta
from .estimator import ScoutSolver

__all__ = [
    "BoundaryPolicy", "ConfigurationError", "CoverageError", "Field", "FootSolverError",
    "Grid1D", "LinearSolverError", "ProblemSpec", "SCHEMES", "SchemeConfig", "ScoutError",
    "ScoutSolver", "SimulationResult", "build_grid", "convergence_study", "get_problem",
    "l1_error", "mass_delta", "problem_names", "run",
]
