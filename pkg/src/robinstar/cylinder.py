"""Decreasing rearrangement in ``y`` on a rectangle ``(0, L) x (0, ell)``.

The base ``D`` of the generalized cylinder is the interval ``(0, L)``.  Grid
functions live on cell centres in both directions; :func:`j_y` and
:func:`star_y` return values on the cell edges ``y_k = k dy`` (``k = 1..M``)
because those are the heights at which a prefix of cells has exact length.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import WeightedSamples

__all__ = [
    "CylinderGrid",
    "CylinderField",
    "y_rearrange",
    "j_y",
    "star_y",
    "laplacian_fd",
]


@dataclass(frozen=True, eq=False)
class CylinderGrid:
    L: float
    ell: float
    nx: int
    my: int

    def __post_init__(self):
        if not (self.L > 0 and self.ell > 0):
            raise ValueError("cylinder needs L > 0 and ell > 0")
        if self.nx < 2 or self.my < 2:
            raise ValueError("cylinder grid needs at least two nodes per axis")

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def dy(self) -> float:
        return self.ell / self.my

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.my) + 0.5) * self.dy

    @property
    def y_edges(self) -> np.ndarray:
        return np.arange(self.my + 1) * self.dy

    @property
    def shape(self):
        return (self.nx, self.my)

    def cell_volumes(self) -> np.ndarray:
        return np.full(self.shape, self.dx * self.dy)

    def volume(self) -> float:
        return self.L * self.ell

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def same_as(self, other: "CylinderGrid") -> bool:
        return (self.L == other.L and self.ell == other.ell
                and self.shape == other.shape)


@dataclass(frozen=True, eq=False)
class CylinderField:
    """Values ``u(x_i, y_j)``; ``on_edges`` selects the ``y_k = k dy`` nodes."""

    grid: CylinderGrid
    values: np.ndarray
    on_edges: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values {values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: CylinderGrid, func) -> "CylinderField":
        xx, yy = grid.mesh()
        return cls(grid, np.broadcast_to(func(xx, yy), grid.shape))

    @property
    def y(self) -> np.ndarray:
        return self.grid.y_edges[1:] if self.on_edges else self.grid.y

    def with_values(self, values, on_edges: bool = None) -> "CylinderField":
        return CylinderField(self.grid, values, self.on_edges if on_edges is None else on_edges)

    def column(self, i: int) -> WeightedSamples:
        return WeightedSamples(self.values[i], np.full(self.grid.my, self.grid.dy))

    def slice_integrals(self) -> np.ndarray:
        """Column integrals ``int_0^ell u(x, y) dy``."""
        return self.values.sum(axis=1) * self.grid.dy

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.dx * self.grid.dy)


def y_rearrange(f: CylinderField) -> CylinderField:
    """Sort every column into nonincreasing order in ``y``."""
    if f.on_edges:
        raise ValueError("y_rearrange expects a cell-centred field")
    return f.with_values(-np.sort(-f.values, axis=1))


def j_y(u: CylinderField) -> CylinderField:
    """``Ju(x, y_k) = int_0^{y_k} u(x, t) dt`` by prefix sums of cell values."""
    if u.on_edges:
        raise ValueError("j_y expects a cell-centred field")
    return u.with_values(np.cumsum(u.values, axis=1) * u.grid.dy, on_edges=True)


def star_y(u: CylinderField) -> CylinderField:
    """Star function of every column, ``J`` of the ``y``-rearrangement."""
    return j_y(y_rearrange(u))


def laplacian_fd(u: CylinderField) -> np.ndarray:
    """Five-point Laplacian at interior ``x`` nodes.

    In ``y`` the field is extended evenly across ``y = 0`` and ``y = ell``
    (cell-centred data) or, for edge data, by ``Ju(x, 0) = 0`` at the bottom
    with the top row left NaN.  Rows ``x_0`` and ``x_{N-1}`` are NaN.
    """
    v = u.values
    dx, dy = u.grid.dx, u.grid.dy
    out = np.full(v.shape, np.nan)
    if u.on_edges:
        ext = np.concatenate((np.zeros((v.shape[0], 1)), v), axis=1)
        uyy = (ext[:, 2:] - 2 * ext[:, 1:-1] + ext[:, :-2]) / dy ** 2
        uxx = (v[2:, :-1] - 2 * v[1:-1, :-1] + v[:-2, :-1]) / dx ** 2
        out[1:-1, :-1] = uxx + uyy[1:-1]
        return out
    ext = np.concatenate((v[:, :1], v, v[:, -1:]), axis=1)
    uyy = (ext[:, 2:] - 2 * ext[:, 1:-1] + ext[:, :-2]) / dy ** 2
    uxx = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx ** 2
    out[1:-1] = uxx + uyy[1:-1]
    return out
