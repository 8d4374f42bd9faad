"""Uniform cell-centred grids, fields and ghost-cell extension."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, CoverageError

SpaceTimeFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n_cells`` cells covering ``[a, b]``.

    Cells use 0-based indices here: cell ``j`` spans
    ``[a + j*dx, a + (j+1)*dx]`` with its centre in the middle. Negative
    indices and indices ``>= n_cells`` address ghost cells.
    """

    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ConfigurationError(f"need b > a, got a={self.a}, b={self.b}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ConfigurationError(f"need an integer n_cells >= 2, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def centers(self) -> np.ndarray:
        return self.center(np.arange(self.n_cells))

    @property
    def interfaces(self) -> np.ndarray:
        return self.interface(np.arange(self.n_cells + 1))

    def center(self, j):
        return self.a + (np.asarray(j) + 0.5) * self.dx

    def interface(self, k):
        """Coordinate of interface ``k`` (left edge of cell ``k``)."""
        return self.a + np.asarray(k) * self.dx

    def cell_index(self, y):
        """Index of the cell containing ``y``.

        Cells are closed on both ends; a point sitting exactly on an
        interface belongs to the cell on its left.
        """
        s = (np.asarray(y, dtype=float) - self.a) / self.dx
        return np.ceil(s).astype(np.int64) - 1


def build_grid(a: float, b: float, n_cells: int) -> Grid1D:
    return Grid1D(float(a), float(b), int(n_cells))


@dataclass
class Field:
    """Point values at cell centres at one time level."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("field values must be one-dimensional")

    def __len__(self):
        return self.values.size

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.time)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(frozen=True)
class BoundaryPolicy:
    """Periodic wrap or Dirichlet data taken from a space-time evaluator."""

    kind: str
    evaluator: Optional[SpaceTimeFn] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("periodic", "dirichlet"):
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.evaluator is None:
            raise ConfigurationError("Dirichlet boundary needs an evaluator")

    @classmethod
    def periodic(cls) -> "BoundaryPolicy":
        return cls("periodic")

    @classmethod
    def dirichlet(cls, evaluator: SpaceTimeFn) -> "BoundaryPolicy":
        return cls("dirichlet", evaluator)

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"


@dataclass(frozen=True)
class ExtendedField:
    """Interior values padded with ``ghost_width`` ghost cells per side."""

    grid: Grid1D
    values: np.ndarray
    ghost_width: int
    time: float

    @property
    def interior(self) -> np.ndarray:
        g = self.ghost_width
        return self.values[g:g + self.grid.n_cells]

    @property
    def left_ghosts(self) -> np.ndarray:
        return self.values[:self.ghost_width]

    @property
    def right_ghosts(self) -> np.ndarray:
        return self.values[self.ghost_width + self.grid.n_cells:]

    @property
    def cell_ids(self) -> np.ndarray:
        """Grid cell indices (possibly negative) of every stored value."""
        g = self.ghost_width
        return np.arange(-g, self.grid.n_cells + g)

    @property
    def centers(self) -> np.ndarray:
        return self.grid.center(self.cell_ids)

    @property
    def left_edge(self) -> float:
        return self.grid.a - self.ghost_width * self.grid.dx

    @property
    def right_edge(self) -> float:
        return self.grid.b + self.ghost_width * self.grid.dx

    def restrict(self) -> Field:
        return Field(self.interior.copy(), self.time)

    def local_index(self, y, strict: bool = True):
        """Storage index of the cell containing ``y``."""
        k = self.grid.cell_index(y) + self.ghost_width
        if strict:
            bad = (k < 0) | (k >= self.values.size)
            if np.any(bad):
                yb = np.asarray(y)[bad] if np.ndim(y) else y
                raise CoverageError(
                    f"points {np.atleast_1d(yb)[:5]} outside extended coverage "
                    f"[{self.left_edge}, {self.right_edge}]")
        return k


def extend(field: Field, grid: Grid1D, bc: BoundaryPolicy, ghost_width: int,
           t: Optional[float] = None) -> ExtendedField:
    """Pad ``field`` with ghost cells according to ``bc``.

    Dirichlet ghosts are sampled from the boundary evaluator at the ghost
    centres and time ``t`` (defaults to the field's time).
    """
    if ghost_width < 1:
        raise ConfigurationError("ghost_width must be >= 1")
    if len(field) != grid.n_cells:
        raise ConfigurationError(
            f"field has {len(field)} values but grid has {grid.n_cells} cells")
    t = field.time if t is None else t
    n, g = grid.n_cells, int(ghost_width)
    ids = np.arange(-g, n + g)
    if bc.is_periodic:
        values = field.values[np.mod(ids, n)]
    else:
        if bc.evaluator is None:
            raise ConfigurationError("Dirichlet boundary needs an evaluator")
        values = np.empty(n + 2 * g)
        values[g:g + n] = field.values
        left, right = ids[:g], ids[g + n:]
        values[:g] = bc.evaluator(grid.center(left), t)
        values[g + n:] = bc.evaluator(grid.center(right), t)
    return ExtendedField(grid, values, g, t)
