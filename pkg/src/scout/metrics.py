"""Error norms, mass change, observed orders and shock location."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, ScoutError
from .mesh import BoundaryPolicy, Field, Grid1D, extend
from .reconstruction import build_reconstruction

logger = logging.getLogger(__name__)

L1_KINDS = ("reconstruction", "point")
MASS_KINDS = ("signed", "abs")
DEFAULT_GAUSS_NODES = 8


def l1_error(field: Field, reference: Callable, grid: Grid1D, kind: str = "reconstruction",
             bc: Optional[BoundaryPolicy] = None, n_nodes: int = DEFAULT_GAUSS_NODES) -> float:
    """L1 distance between the numerical and reference solutions.

    Parameters
    ----------
    field : Field
        Numerical point values at cell centres.
    reference : callable
        ``reference(x, t)`` evaluated at ``field.time``.
    kind : {"reconstruction", "point"}
        ``"point"`` is ``dx * sum |q_i - ref(x_i)|``. ``"reconstruction"``
        integrates ``|R(x) - ref(x)|`` over every cell with ``n_nodes``
        Gauss-Legendre points, where ``R`` is the central-slope linear
        reconstruction of the point values.
    bc : BoundaryPolicy, optional
        Closure for the edge slopes; defaults to Dirichlet data from
        ``reference``.
    """
    if kind not in L1_KINDS:
        raise ConfigurationError(f"unknown L1 kind {kind!r}; choose from {L1_KINDS}")
    t = field.time
    if kind == "point":
        return float(grid.dx * np.sum(np.abs(field.values - reference(grid.centers, t))))
    bc = bc if bc is not None else BoundaryPolicy.dirichlet(reference)
    recon = build_reconstruction(extend(field, grid, bc, 2, t))
    xi, w = np.polynomial.legendre.leggauss(n_nodes)
    x = grid.centers[:, None] + 0.5 * grid.dx * xi[None, :]
    diff = np.abs(recon.evaluate(x) - reference(x, t))
    return float(0.5 * grid.dx * np.sum(diff * w))


def mass(field: Field, grid: Grid1D, kind: str = "signed") -> float:
    if kind not in MASS_KINDS:
        raise ConfigurationError(f"unknown mass kind {kind!r}; choose from {MASS_KINDS}")
    q = field.values if kind == "signed" else np.abs(field.values)
    return float(grid.dx * math.fsum(q))


def mass_delta(initial: Field, final: Field, grid: Grid1D, kind: str = "signed") -> float:
    """``|M(final) - M(initial)|`` with ``M = dx * sum q`` (or ``sum |q|``)."""
    return abs(mass(final, grid, kind) - mass(initial, grid, kind))


def observed_order(coarse_error: float, fine_error: float, ratio: float = 2.0) -> float:
    if not (coarse_error > 0 and fine_error > 0):
        return float("nan")
    return math.log(coarse_error / fine_error) / math.log(ratio)


def observed_orders(errors: Sequence[float]) -> List[Optional[float]]:
    """Orders for a doubling chain; the first entry is ``None``."""
    return [None] + [observed_order(a, b) for a, b in zip(errors[:-1], errors[1:])]


@dataclass
class ConvergenceRow:
    n_cells: int
    l1_error: float
    l1_order: Optional[float] = None
    mass_delta: float = 0.0
    failed: bool = False
    message: str = ""


def convergence_study(problem, config, resolutions: Sequence[int],
                      reference: Optional[Callable] = None,
                      l1_kind: str = "reconstruction", mass_kind: str = "signed",
                      runner: Optional[Callable] = None) -> List[ConvergenceRow]:
    """One row per resolution; a failed run marks its row and the study goes on.

    ``reference(x, t)`` defaults to the problem's exact solution.
    ``runner(problem, n, config)`` defaults to :func:`scout.steppers.run`.
    """
    from .steppers import run

    runner = runner or run
    ref = reference if reference is not None else problem.exact
    if ref is None:
        raise ConfigurationError(f"{problem.name}: no exact solution; pass a reference")
    ns = list(resolutions)
    if any(b != 2 * a for a, b in zip(ns[:-1], ns[1:])):
        logger.warning("resolutions %s are not a doubling chain; orders assume ratio 2", ns)
    rows: List[ConvergenceRow] = []
    for n in ns:
        try:
            res = runner(problem, n, config)
            err = l1_error(res.final, ref, res.grid, l1_kind, bc=problem.boundary)
            dq = mass_delta(res.initial, res.final, res.grid, mass_kind)
            rows.append(ConvergenceRow(n, err, None, dq))
        except (ScoutError, FloatingPointError, ArithmeticError) as exc:
            logger.error("%s N=%d failed: %s", problem.name, n, exc)
            rows.append(ConvergenceRow(n, float("nan"), None, float("nan"), True, str(exc)))
    for prev, row in zip(rows[:-1], rows[1:]):
        if not (prev.failed or row.failed) and row.n_cells == 2 * prev.n_cells:
            row.l1_order = observed_order(prev.l1_error, row.l1_error)
    return rows


def shock_midpoint(x, q, states: Optional[Sequence[float]] = None, window: int = 10) -> float:
    """Location where ``q`` crosses the mean of the left and right states.

    The crossing is taken next to the steepest decrease of ``q`` and
    located by linear interpolation between neighbouring samples.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.size < 3:
        raise ConfigurationError("need at least three samples")
    k = int(np.argmin(np.diff(q)))
    if states is None:
        ql = q[max(0, k - window):k + 1].max()
        qr = q[k + 1:k + 2 + window].min()
    else:
        ql, qr = states
    mid = 0.5 * (ql + qr)
    s = q - mid
    # walk outwards from the steepest drop to the nearest sign change
    for off in range(x.size):
        for j in (k - off, k + off):
            if 0 <= j < x.size - 1 and s[j] >= 0 > s[j + 1]:
                return float(x[j] + s[j] / (s[j] - s[j + 1]) * (x[j + 1] - x[j]))
    raise ScoutError("no crossing of the mid-state found")
