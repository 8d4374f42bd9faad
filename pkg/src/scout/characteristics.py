"""Backward tracing of characteristics to their feet at the old time level.

Three velocity models are supported: a constant speed (exact foot), a
prescribed ``u(x, t)`` (Heun's method) and a nonlinear flux ``f(q)`` whose
characteristic speed depends on the solution (Newton with a bisection
fallback on the implicit foot equation).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .exceptions import CoverageError, FootSolverError
from .mesh import Grid1D
from .reconstruction import LinearReconstruction

logger = logging.getLogger(__name__)

NEWTON_MAX_ITER = 50
NEWTON_RTOL = 1e-12
FLAT_DERIVATIVE = 1e-14


class FootMethod(enum.IntEnum):
    EXACT = 0
    RK2 = 1
    NEWTON = 2
    BISECTION = 3
    ENTROPY = 4


@dataclass(frozen=True)
class ConstantVelocity:
    u: float

    def speed_bound(self, *_):
        return abs(self.u)


@dataclass(frozen=True)
class SpaceTimeVelocity:
    """Prescribed velocity ``u(x, t)``.

    ``dudx`` is only needed by the non-conservative baseline, which has to
    integrate the compression term ``-u_x q`` along trajectories. When it is
    omitted a centred difference is used.
    """

    u: Callable[[np.ndarray, float], np.ndarray]
    dudx: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def derivative(self, x, t, h=1e-6):
        if self.dudx is not None:
            return self.dudx(x, t)
        return (self.u(x + h, t) - self.u(x - h, t)) / (2 * h)


@dataclass(frozen=True)
class NonlinearFlux:
    """Flux ``f(q)`` with its first two derivatives."""

    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]
    fsecond: Callable[[np.ndarray], np.ndarray]
    name: str = "nonlinear"


def _burgers_f(q):
    return 0.5 * q * q


def _burgers_fprime(q):
    return q


def _burgers_fsecond(q):
    return np.ones_like(q)


BURGERS = NonlinearFlux(_burgers_f, _burgers_fprime, _burgers_fsecond, "burgers")

VelocityModel = Union[ConstantVelocity, SpaceTimeVelocity, NonlinearFlux]


@dataclass
class FootResult:
    """Feet of characteristics plus solver diagnostics.

    Fields hold scalars for a single departure point and arrays when a whole
    set of points was traced at once.
    """

    x_foot: np.ndarray
    lam: np.ndarray
    iterations: np.ndarray
    method: np.ndarray
    crossed_interfaces: np.ndarray

    def __len__(self):
        return np.size(self.x_foot)

    def __getitem__(self, i) -> "FootResult":
        return FootResult(self.x_foot[i], self.lam[i], self.iterations[i],
                          self.method[i], self.crossed_interfaces[i])

    @property
    def fallback_count(self) -> int:
        return int(np.count_nonzero(np.asarray(self.method) == FootMethod.BISECTION))

    @property
    def total_iterations(self) -> int:
        return int(np.sum(self.iterations))


def upwind_sign(x, x_foot):
    return np.sign(np.asarray(x) - np.asarray(x_foot)).astype(np.int64)


def count_crossed(grid: Grid1D, x, x_foot, eps=1e-9):
    """Grid interfaces strictly between ``x_foot`` and ``x``."""
    lo = (np.minimum(x, x_foot) - grid.a) / grid.dx
    hi = (np.maximum(x, x_foot) - grid.a) / grid.dx
    n = np.ceil(hi - eps) - np.floor(lo + eps) - 1
    return np.maximum(n, 0).astype(np.int64)


def _result(x, x_foot, iterations, method, grid, scalar):
    lam = upwind_sign(x, x_foot)
    crossed = (count_crossed(grid, x, x_foot) if grid is not None
               else np.zeros(np.shape(x), dtype=np.int64))
    method = np.broadcast_to(np.asarray(method, dtype=np.int64), np.shape(x_foot)).copy()
    iterations = np.broadcast_to(np.asarray(iterations, dtype=np.int64), np.shape(x_foot)).copy()
    if scalar:
        return FootResult(float(x_foot), int(lam), int(iterations), FootMethod(int(method)),
                          int(crossed))
    return FootResult(x_foot, lam, iterations, method, crossed)


def foot_constant(x, u_bar: float, dt: float, grid: Optional[Grid1D] = None) -> FootResult:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    return _result(x, x - u_bar * dt, 0, FootMethod.EXACT, grid, scalar)


def rk2_stages(x, u, t_new: float, dt: float):
    """Heun stages of the backward trajectory; returns ``(x_foot, Y2)``."""
    x = np.asarray(x, dtype=float)
    k1 = -np.asarray(u(x, t_new), dtype=float)
    y2 = x + dt * k1
    k2 = -np.asarray(u(y2, t_new - dt), dtype=float)
    return x + 0.5 * dt * (k1 + k2), y2


def foot_rk2(x, u, t_new: float, dt: float, grid: Optional[Grid1D] = None) -> FootResult:
    """Heun's method for ``dy/ds = -u(y, t_new - s)``, ``y(0) = x``."""
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    x_foot, _ = rk2_stages(x, u, t_new, dt)
    return _result(x, x_foot, 0, FootMethod.RK2, grid, scalar)


def speed_bound(recon: LinearReconstruction, fprime) -> float:
    lo, hi = recon.edge_values()
    s = np.abs(fprime(np.concatenate([lo, hi, recon.values])))
    return float(np.max(s))


def foot_residual(y, x, recon: LinearReconstruction, fprime, dt: float):
    """``g(y) = y - x + f'(R(y)) dt``; its root is the characteristic foot."""
    return y - x + fprime(recon.evaluate(y)) * dt


def foot_newton(x, recon: LinearReconstruction, flux: NonlinearFlux, dt: float,
                tol=None, max_iter: int = NEWTON_MAX_ITER) -> FootResult:
    """Solve ``y = x - f'(R(y)) dt`` for every departure point in ``x``.

    Newton starts from ``x - f'(R(x)) dt``. Points where Newton stalls, meets
    a flat derivative or jumps out of the bracket ``|y - x| <= W`` with
    ``W = max|f'| dt + dx`` are handed to bisection, which widens its
    bracket geometrically until ``g`` changes sign.

    ``R`` is discontinuous at interfaces, so ``g`` can jump over zero there;
    bisection then collapses onto that interface and the returned foot is
    the interface itself (a root of ``g`` in the bracketing sense).
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grid = recon.grid
    if tol is None:
        tol = NEWTON_RTOL * np.maximum(1.0, np.abs(x))
    tol = np.broadcast_to(np.asarray(tol, dtype=float), x.shape)
    if dt == 0:
        if scalar:
            return _result(x[0], x[0], 0, FootMethod.NEWTON, grid, True)
        return _result(x, x.copy(), 0, FootMethod.NEWTON, grid, False)

    fp = flux.fprime
    ext = recon.extended
    cov_lo, cov_hi = ext.left_edge, ext.right_edge
    dx = grid.dx
    half_width = speed_bound(recon, fp) * dt + dx

    y = np.clip(x - fp(recon.evaluate(np.clip(x, cov_lo, cov_hi))) * dt, cov_lo, cov_hi)
    gy = foot_residual(y, x, recon, fp, dt)
    done = np.abs(gy) <= tol
    failed = np.zeros(x.shape, dtype=bool)
    iters = np.zeros(x.shape, dtype=np.int64)

    for _ in range(max_iter):
        act = np.flatnonzero(~done & ~failed)
        if act.size == 0:
            break
        ya = y[act]
        k = recon.cell_of(ya)
        r = recon.evaluate_in_cell(k, ya)
        gp = 1.0 + flux.fsecond(r) * recon.slopes[k] / dx * dt
        flat = np.abs(gp) < FLAT_DERIVATIVE
        ynew = ya - gy[act] / np.where(flat, 1.0, gp)
        out = (np.abs(ynew - x[act]) > half_width) | (ynew < cov_lo) | (ynew > cov_hi)
        bad = flat | out
        failed[act[bad]] = True
        good = act[~bad]
        y[good] = ynew[~bad]
        iters[good] += 1
        gy[good] = foot_residual(y[good], x[good], recon, fp, dt)
        done[good] = np.abs(gy[good]) <= tol[good]
    failed |= ~done

    method = np.full(x.shape, FootMethod.NEWTON, dtype=np.int64)
    if failed.any():
        idx = np.flatnonzero(failed)
        y[idx], extra = _bisect(x[idx], recon, fp, dt, tol[idx], half_width)
        iters[idx] += extra
        method[idx] = FootMethod.BISECTION
        logger.debug("bisection fallback used for %d of %d feet", idx.size, x.size)

    _check_sign_consistency(x, y, recon, fp)
    if scalar:
        return _result(x[0], y[0], iters[0], method[0], grid, True)
    return _result(x, y, iters, method, grid, False)


def _bisect(x, recon, fp, dt, tol, half_width, max_expand=40, max_iter=200):
    ext = recon.extended
    cov_lo, cov_hi = ext.left_edge, ext.right_edge
    w = np.full(x.shape, half_width)
    for _ in range(max_expand):
        lo, hi = x - w, x + w
        if np.any(lo < cov_lo) or np.any(hi > cov_hi):
            raise FootSolverError(
                "bisection bracket left the extended coverage",
                {"x": x.copy(), "half_width": w.copy(), "coverage": (cov_lo, cov_hi), "dt": dt})
        glo = foot_residual(lo, x, recon, fp, dt)
        ghi = foot_residual(hi, x, recon, fp, dt)
        ok = (glo <= 0) & (ghi >= 0)
        if ok.all():
            break
        w = np.where(ok, w, 2 * w)
    else:
        raise FootSolverError("no sign change found for the foot equation",
                              {"x": x.copy(), "half_width": w.copy(), "dt": dt})

    y = np.empty_like(x)
    iters = np.zeros(x.shape, dtype=np.int64)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(max_iter):
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        mid = 0.5 * (lo[a] + hi[a])
        gm = foot_residual(mid, x[a], recon, fp, dt)
        iters[a] += 1
        conv = np.abs(gm) <= tol[a]
        y[a[conv]] = mid[conv]
        active[a[conv]] = False
        rest = ~conv
        neg = rest & (gm < 0)
        pos = rest & (gm > 0)
        lo[a[neg]] = mid[neg]
        hi[a[pos]] = mid[pos]
        width = hi[a] - lo[a]
        collapsed = rest & (width <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid)))
        if collapsed.any():
            c = a[collapsed]
            gl = np.abs(foot_residual(lo[c], x[c], recon, fp, dt))
            gh = np.abs(foot_residual(hi[c], x[c], recon, fp, dt))
            y[c] = np.where(gl <= gh, lo[c], hi[c])
            active[c] = False
    if active.any():
        a = np.flatnonzero(active)
        y[a] = 0.5 * (lo[a] + hi[a])
    return y, iters


def _check_sign_consistency(x, y, recon, fp):
    try:
        s_arr = np.sign(fp(recon.evaluate(x)))
    except CoverageError:
        return
    s_foot = np.sign(fp(recon.evaluate(y)))
    flips = np.count_nonzero(s_arr * s_foot < 0)
    if flips:
        logger.debug("characteristic speed changes sign along %d trajectories", flips)


def trace_feet(model: VelocityModel, x, dt: float, t_new: float,
               recon: Optional[LinearReconstruction] = None,
               grid: Optional[Grid1D] = None, tol=None,
               max_iter: int = NEWTON_MAX_ITER) -> FootResult:
    """Dispatch to the foot solver matching ``model``."""
    if isinstance(model, ConstantVelocity):
        return foot_constant(x, model.u, dt, grid)
    if isinstance(model, SpaceTimeVelocity):
        return foot_rk2(x, model.u, t_new, dt, grid)
    if isinstance(model, NonlinearFlux):
        if recon is None:
            raise ValueError("nonlinear feet need a reconstruction")
        return foot_newton(x, recon, model, dt, tol=tol, max_iter=max_iter)
    raise TypeError(f"unsupported velocity model {type(model).__name__}")
