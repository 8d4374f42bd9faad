"""Interface flux integrals built from characteristic feet.

The time integral of the flux through an interface equals the oriented
spatial integral of the old solution between the foot and the interface.
For nonlinear fluxes a correction ``dt * (f - q f')`` evaluated at the foot
is added.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .characteristics import (NEWTON_MAX_ITER, FootMethod, FootResult, NonlinearFlux,
                              VelocityModel, _result, trace_feet)
from .reconstruction import LinearReconstruction


@dataclass(frozen=True)
class Quadrature:
    """Rule on the unit interval; weights sum to one."""

    nodes: Tuple[float, ...]
    weights: Tuple[float, ...]

    @classmethod
    def midpoint(cls) -> "Quadrature":
        return cls((0.5,), (1.0,))

    @classmethod
    def gauss_legendre(cls, n: int) -> "Quadrature":
        xi, w = np.polynomial.legendre.leggauss(n)
        return cls(tuple(0.5 * (xi + 1.0)), tuple(0.5 * w))

    def __len__(self):
        return len(self.nodes)


MIDPOINT = Quadrature.midpoint()


@dataclass(frozen=True)
class FluxContext:
    """Where a foot sits relative to the grid.

    ``j_star`` is the storage index of the foot's cell and ``dx_star`` the
    distance from the foot to that cell's right interface.
    """

    j_star: np.ndarray
    dx_star: np.ndarray
    lam: np.ndarray
    quadrature: Quadrature = MIDPOINT


def flux_context(recon: LinearReconstruction, x_foot, x_iface,
                 quadrature: Quadrature = MIDPOINT) -> FluxContext:
    ext = recon.extended
    k = recon.cell_of(x_foot)
    right = ext.left_edge + (k + 1) * recon.dx
    lam = np.sign(np.asarray(x_iface) - np.asarray(x_foot)).astype(np.int64)
    return FluxContext(k, right - np.asarray(x_foot), lam, quadrature)


def _segment_integral(recon, k, s0, s1, quad):
    width = s1 - s0
    total = np.zeros(np.shape(width))
    for xi, w in zip(quad.nodes, quad.weights):
        total = total + w * recon.evaluate_in_cell(k, s0 + xi * width)
    return width * total


def _cell_integrals(recon, quad):
    ext = recon.extended
    k = np.arange(recon.values.size)
    return _segment_integral(recon, k, ext.left_edge + k * recon.dx,
                             ext.left_edge + (k + 1) * recon.dx, quad)


def signed_spatial_integral(recon: LinearReconstruction, x_foot, x_iface,
                            quadrature: Quadrature = MIDPOINT):
    """Oriented integral of the reconstruction from ``x_foot`` to ``x_iface``.

    The interval is split into a partial segment in the first cell, whole
    cells, and a partial segment in the last cell; each piece uses
    ``quadrature``. Swapping the endpoints negates the result.
    """
    scalar = np.ndim(x_foot) == 0 and np.ndim(x_iface) == 0
    x_foot, x_iface = np.broadcast_arrays(np.asarray(x_foot, dtype=float),
                                          np.asarray(x_iface, dtype=float))
    lo = np.minimum(x_foot, x_iface)
    hi = np.maximum(x_foot, x_iface)
    sign = np.where(x_foot <= x_iface, 1.0, -1.0)

    ext = recon.extended
    dx = recon.dx
    ka = recon.cell_of(lo)
    kb = recon.cell_of(hi)
    same = ka == kb
    cumulative = np.concatenate(([0.0], np.cumsum(_cell_integrals(recon, quadrature))))

    a_end = np.where(same, hi, ext.left_edge + (ka + 1) * dx)
    first = _segment_integral(recon, ka, lo, a_end, quadrature)
    whole = np.where(same, 0.0, cumulative[kb] - cumulative[np.minimum(ka + 1, kb)])
    last = np.where(same, 0.0,
                    _segment_integral(recon, kb, ext.left_edge + kb * dx, hi, quadrature))
    out = sign * (first + whole + last)
    return float(out) if scalar else out


def nonlinear_correction(recon: LinearReconstruction, x_foot, flux: NonlinearFlux, dt: float):
    """``dt * (f(q*) - q* f'(q*))`` with ``q*`` the reconstruction at the foot."""
    q = recon.evaluate(x_foot)
    return dt * (flux.f(q) - q * flux.fprime(q))


def _fan_state(flux: NonlinearFlux, v, q_a, q_b, n_iter: int = 60):
    """``q`` between ``q_a`` and ``q_b`` with ``f'(q) = v`` (monotone ``f'``)."""
    lo = np.minimum(q_a, q_b)
    hi = np.maximum(q_a, q_b)
    increasing = flux.fprime(hi) >= flux.fprime(lo)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = (flux.fprime(mid) < v) == increasing
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FootCandidates:
    """Every admissible foot of a set of interfaces.

    ``owner[m]`` is the interface (position in ``x_iface``) of candidate
    ``m``; ``q_star`` is the state carried along its characteristic and
    ``at_edge`` flags feet sitting on a rising jump of the reconstruction
    (a centred fan).
    """

    owner: np.ndarray
    y: np.ndarray
    q_star: np.ndarray
    at_edge: np.ndarray


def foot_candidates(recon: LinearReconstruction, flux: NonlinearFlux, x_iface, dt: float,
                    n_iter: int = 60) -> FootCandidates:
    """All roots of ``g(y) = y - x + f'(R(y)) dt`` plus fan feet at jumps.

    Each cell's polynomial is scanned on its own closed interval, so a
    sign change of ``g`` inside a cell gives a root located by bisection,
    and a jump of ``R`` across which ``g`` rises through zero gives a foot
    at that interface with the fan state solving ``f'(q) = (x - y) / dt``.
    """
    x = np.atleast_1d(np.asarray(x_iface, dtype=float))
    ext = recon.extended
    dx = recon.dx
    nstore = recon.values.size
    lo_q, hi_q = recon.value_range()
    s = flux.fprime(np.linspace(lo_q, hi_q, 65))
    smin, smax = float(np.min(s)), float(np.max(s))
    ka = np.clip(recon.cell_of(np.clip(x - smax * dt - dx, ext.left_edge, ext.right_edge)),
                 0, nstore - 1)
    kb = np.clip(recon.cell_of(np.clip(x - smin * dt + dx, ext.left_edge, ext.right_edge)),
                 0, nstore - 1)
    width = int(np.max(kb - ka)) + 1
    k = ka[:, None] + np.arange(width)[None, :]
    valid = k <= kb[:, None]
    k = np.minimum(k, nstore - 1)
    xi = np.broadcast_to(x[:, None], k.shape)

    yl = ext.left_edge + k * dx
    yr = yl + dx
    ql, qr = recon.edge_values()
    gl = yl - xi + flux.fprime(ql[k]) * dt
    gr = yr - xi + flux.fprime(qr[k]) * dt

    # roots inside a cell (closed on the left, open on the right so that
    # a root on a shared edge is counted once)
    inside = valid & (((gl <= 0) & (gr > 0)) | ((gl >= 0) & (gr < 0)))
    ii, jj = np.nonzero(inside)
    kc = k[ii, jj]
    a, b = yl[ii, jj].copy(), yr[ii, jj].copy()
    ga = gl[ii, jj]
    xs = x[ii]
    for _ in range(n_iter):
        mid = 0.5 * (a + b)
        gm = mid - xs + flux.fprime(recon.evaluate_in_cell(kc, mid)) * dt
        same = np.sign(gm) == np.sign(ga)
        a = np.where(same, mid, a)
        ga = np.where(same, gm, ga)
        b = np.where(same, b, mid)
    y_in = 0.5 * (a + b)
    q_in = recon.evaluate_in_cell(kc, y_in)

    # fan feet on rising jumps between neighbouring cells
    edge = valid[:, :-1] & valid[:, 1:] & (gr[:, :-1] < 0) & (gl[:, 1:] > 0)
    ie, je = np.nonzero(edge)
    y_e = yr[ie, je]
    q_e = _fan_state(flux, (x[ie] - y_e) / dt if dt > 0 else np.zeros_like(y_e),
                     qr[k[ie, je]], ql[k[ie, je + 1]])

    owner = np.concatenate([ii, ie])
    order = np.argsort(owner, kind="stable")
    return FootCandidates(owner[order], np.concatenate([y_in, y_e])[order],
                          np.concatenate([q_in, q_e])[order],
                          np.concatenate([np.zeros(ii.size, bool), np.ones(ie.size, bool)])[order])


def _flux_convexity(recon: LinearReconstruction, flux: NonlinearFlux) -> int:
    lo, hi = recon.value_range()
    c = flux.fsecond(np.linspace(lo, hi, 65))
    if np.all(c >= 0):
        return 1
    if np.all(c <= 0):
        return -1
    return 0


def select_entropy_feet(recon: LinearReconstruction, flux: NonlinearFlux, x_iface, dt: float,
                        feet: FootResult, quadrature: Quadrature = MIDPOINT):
    """Replace ambiguous feet by the entropy-admissible one.

    Where the foot equation has several roots (characteristics converging
    into a steep front) the flux written as a function of the foot equals
    a constant minus the Hopf-Lax functional of that foot, so for a convex
    flux the physically relevant foot is the one with the largest flux
    (smallest for a concave flux). Interfaces with a single in-cell root
    keep the Newton foot. Returns ``(feet, q_star)`` where ``q_star`` is
    the state carried by each selected characteristic.
    """
    x = np.atleast_1d(np.asarray(x_iface, dtype=float))
    y = np.atleast_1d(np.array(feet.x_foot, dtype=float))
    q_star = recon.evaluate(y)
    sense = _flux_convexity(recon, flux)
    if dt == 0 or sense == 0:
        return feet, q_star
    cand = foot_candidates(recon, flux, x, dt)
    if cand.owner.size == 0:
        return feet, q_star
    counts = np.bincount(cand.owner, minlength=x.size)
    pick = (counts > 1) | (np.bincount(cand.owner, weights=cand.at_edge, minlength=x.size) > 0)
    if not pick.any():
        return feet, q_star
    m = pick[cand.owner]
    own, yc, qc = cand.owner[m], cand.y[m], cand.q_star[m]
    h = signed_spatial_integral(recon, yc, x[own], quadrature) \
        + dt * (flux.f(qc) - qc * flux.fprime(qc))
    # best candidate per interface: sort by owner then by signed flux
    order = np.lexsort((-sense * h, own))
    first = np.ones(order.size, dtype=bool)
    first[1:] = own[order][1:] != own[order][:-1]
    best = order[first]
    idx = own[best]
    y = y.copy()
    y[idx] = yc[best]
    q_star[idx] = qc[best]
    method = np.array(feet.method, dtype=np.int64, copy=True).reshape(y.shape)
    method[idx] = FootMethod.ENTROPY
    new = _result(x, y, np.array(feet.iterations).reshape(y.shape), method, recon.grid, False)
    return new, q_star


def interface_flux(recon: LinearReconstruction, model: VelocityModel, x_iface, dt: float,
                   t_new: Optional[float] = None, tol=None, max_iter: int = NEWTON_MAX_ITER,
                   quadrature: Quadrature = MIDPOINT, entropy_selection: bool = True):
    """Flux time-integral through each point of ``x_iface`` over one step.

    Returns ``(H_hat, feet)``. For nonlinear fluxes with
    ``entropy_selection`` the Newton feet are checked for competing roots
    (see :func:`select_entropy_feet`).
    """
    t_new = recon.extended.time + dt if t_new is None else t_new
    feet = trace_feet(model, x_iface, dt, t_new, recon=recon, grid=recon.grid,
                      tol=tol, max_iter=max_iter)
    if not isinstance(model, NonlinearFlux):
        return signed_spatial_integral(recon, feet.x_foot, x_iface, quadrature), feet
    if entropy_selection and np.ndim(x_iface) > 0:
        feet, q_star = select_entropy_feet(recon, model, x_iface, dt, feet, quadrature)
    else:
        q_star = recon.evaluate(feet.x_foot)
    h = signed_spatial_integral(recon, feet.x_foot, x_iface, quadrature)
    h = h + dt * (model.f(q_star) - q_star * model.fprime(q_star))
    return h, feet
