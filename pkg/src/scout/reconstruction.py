"""Piecewise-linear reconstruction from cell-centre point values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import ExtendedField, Grid1D

LIMITERS = ("none", "minmod")


def minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


@dataclass(frozen=True)
class LinearReconstruction:
    """Per-cell polynomials ``q_j + slope_j * (x - x_j) / dx``.

    ``slopes`` are undivided differences (units of ``q``), so a linear
    profile ``q = m x`` has slope ``m * dx`` in every cell.
    """

    extended: ExtendedField
    slopes: np.ndarray
    limiter: str = "none"

    @property
    def grid(self) -> Grid1D:
        return self.extended.grid

    @property
    def values(self) -> np.ndarray:
        return self.extended.values

    @property
    def dx(self) -> float:
        return self.extended.grid.dx

    def cell_of(self, x):
        return self.extended.local_index(x)

    def evaluate(self, x):
        """Value of the containing cell's polynomial at ``x``."""
        x = np.asarray(x, dtype=float)
        k = self.cell_of(x)
        xc = self.extended.centers[k]
        return self.values[k] + self.slopes[k] * (x - xc) / self.dx

    __call__ = evaluate

    def derivative(self, x):
        k = self.cell_of(x)
        return self.slopes[k] / self.dx

    def evaluate_in_cell(self, k, x):
        """Evaluate polynomial of storage cell ``k`` at ``x`` (no lookup)."""
        xc = self.extended.left_edge + (k + 0.5) * self.dx
        return self.values[k] + self.slopes[k] * (x - xc) / self.dx

    def edge_values(self):
        """Left and right edge values of every stored cell."""
        half = 0.5 * self.slopes
        return self.values - half, self.values + half

    def value_range(self):
        lo, hi = self.edge_values()
        return (float(min(lo.min(), hi.min(), self.values.min())),
                float(max(lo.max(), hi.max(), self.values.max())))


def build_reconstruction(extended: ExtendedField, limiter: str = "none") -> LinearReconstruction:
    """Central-difference slopes, optionally limited with minmod.

    The two outermost stored cells have only one neighbour and fall back to
    a one-sided difference; ghost widths are chosen so that no foot or
    quadrature point ever lands there.
    """
    if limiter not in LIMITERS:
        raise ValueError(f"unknown limiter {limiter!r}; choose from {LIMITERS}")
    q = extended.values
    slopes = np.empty_like(q)
    if limiter == "none":
        slopes[1:-1] = 0.5 * (q[2:] - q[:-2])
    else:
        slopes[1:-1] = minmod(q[2:] - q[1:-1], q[1:-1] - q[:-2])
    slopes[0] = q[1] - q[0]
    slopes[-1] = q[-1] - q[-2]
    if limiter == "minmod":
        slopes[0] = slopes[-1] = 0.0
    return LinearReconstruction(extended, slopes, limiter)


def evaluate(recon: LinearReconstruction, x):
    return recon.evaluate(x)
