"""Seeded source fields and grid construction for comparison scenarios.

Random coefficients come from ``numpy.random.Generator(PCG64(seed))`` so a
seed fixes the field bit for bit on a given grid.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import eval_legendre

from .cylinder import CylinderField, CylinderGrid, y_rearrange
from .manufactured import manufactured
from .solver import DOMAIN_KINDS, normalize_zero_mean
from .sphere import ShellField, ShellGrid, cap_symmetrize

__all__ = ["SOURCE_KINDS", "SourceSpec", "Geometry", "build_grid", "generate_source", "rng_for"]

SOURCE_KINDS = ("bandlimited", "nonneg_bandlimited", "manufactured", "symmetric")
RADIAL_MODES = 4


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SourceSpec:
    kind: str = "bandlimited"
    seed: int = 0
    max_mode: int = 8
    amplitude: float = 1.0
    zero_mean: bool = None   # None: project exactly when the problem is pure Neumann

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {SOURCE_KINDS}")
        if self.max_mode < 0:
            raise ValueError("max_mode must be nonnegative")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Geometry:
    """``(a, b)`` radii for shells and balls (``a = 0``) or ``(L, ell)`` for the rectangle."""

    a: float = 1.0
    b: float = 2.0
    L: float = 1.0
    ell: float = 1.0

    @classmethod
    def default(cls, kind: str) -> "Geometry":
        if kind in ("disk2d", "ball3d_axisym"):
            return cls(a=0.0, b=1.0)
        return cls()

    def length(self, kind: str) -> float:
        """Length scale entering the tolerance model."""
        if kind == "cylinder_rect":
            return max(self.L, self.ell)
        return self.b - self.a

    def to_dict(self):
        return asdict(self)


def build_grid(kind: str, geometry: Geometry, nr: int, m: int):
    if kind not in DOMAIN_KINDS:
        raise ValueError(f"unknown domain kind {kind!r}")
    if kind == "cylinder_rect":
        return CylinderGrid(geometry.L, geometry.ell, nr, m)
    dim, ball = DOMAIN_KINDS[kind]
    a = 0.0 if ball else geometry.a
    if ball and geometry.a != 0:
        raise ValueError(f"{kind} needs a = 0")
    if not ball and geometry.a <= 0:
        raise ValueError(f"{kind} needs a > 0")
    return ShellGrid.make(a, geometry.b, dim, nr, m)


def _radial_basis(grid, q: int, mode: int):
    """Smooth radial (or ``x``) factor; ball factors carry ``(r/b)^mode``."""
    if isinstance(grid, CylinderGrid):
        return np.cos(q * np.pi * grid.x / grid.L)
    r = grid.r
    if grid.is_ball:
        return (r / grid.b) ** mode * np.cos(q * np.pi * r / grid.b)
    return np.cos(q * np.pi * (r - grid.a) / (grid.b - grid.a))


def _angular_basis(grid, mode: int):
    """Angular factors of one mode: cos/sin pairs in 2d and ``y``, ``P_l`` on the sphere."""
    if isinstance(grid, CylinderGrid):
        k = mode * np.pi * grid.y / grid.ell
        return [np.cos(k)] + ([np.sin(k)] if mode else [])
    if grid.dim == 2:
        phi = grid.angular.nodes
        return [np.cos(mode * phi)] + ([np.sin(mode * phi)] if mode else [])
    return [eval_legendre(mode, np.cos(grid.angular.nodes))]


def _bandlimited(grid, rng, max_mode: int) -> np.ndarray:
    out = np.zeros(grid.shape)
    for mode in range(max_mode + 1):
        for ang in _angular_basis(grid, mode):
            for q in range(RADIAL_MODES):
                out += rng.uniform(-1.0, 1.0) * np.outer(_radial_basis(grid, q, mode), ang)
    return out


def _symmetric(grid, rng) -> np.ndarray:
    h = sum(rng.uniform(-1, 1) * _radial_basis(grid, q, 0) for q in range(RADIAL_MODES))
    g = sum(rng.uniform(-1, 1) * _radial_basis(grid, q, 1) for q in range(RADIAL_MODES)) ** 2
    if isinstance(grid, CylinderGrid):
        ang = np.cos(np.pi * grid.y / grid.ell)
    else:
        # cos(phi) on the circle, cos(theta) on the sphere
        ang = np.cos(grid.angular.nodes)
    if not isinstance(grid, CylinderGrid) and grid.is_ball:
        g = g * (grid.r / grid.b)
    return h[:, None] + np.outer(g, ang)


def _wrap(grid, values):
    return CylinderField(grid, values) if isinstance(grid, CylinderGrid) else ShellField(grid, values)


def generate_source(spec: SourceSpec, grid, kind: str = None, alpha1: float = 0.0,
                    alpha2: float = 0.0):
    """Field for ``spec`` on ``grid``.

    ``kind`` and the alphas are needed by the manufactured source (its exact
    solution satisfies the Robin conditions) and decide the automatic zero
    mean projection.  ``symmetric`` sources equal their own symmetrization
    exactly on the grid.
    """
    rng = rng_for(spec.seed)
    if spec.kind == "bandlimited":
        values = _bandlimited(grid, rng, spec.max_mode)
    elif spec.kind == "nonneg_bandlimited":
        values = _bandlimited(grid, rng, spec.max_mode) ** 2
    elif spec.kind == "symmetric":
        values = _symmetric(grid, rng)
    else:
        if kind is None:
            raise ValueError("manufactured sources need the domain kind")
        if isinstance(grid, CylinderGrid):
            ms = manufactured(kind, alpha1, alpha2, b=grid.L, ell=grid.ell)
        else:
            ms = manufactured(kind, alpha1, alpha2, a=grid.a, b=grid.b)
        values = np.broadcast_to(ms.source(*grid.mesh()), grid.shape)
    field = _wrap(grid, spec.amplitude * np.asarray(values))
    if spec.kind == "symmetric":
        field = y_rearrange(field) if isinstance(grid, CylinderGrid) else cap_symmetrize(field)
    zero_mean = spec.zero_mean
    if zero_mean is None:
        zero_mean = spec.kind != "manufactured" and alpha1 == 0 and alpha2 == 0
    if zero_mean:
        # a constant shift keeps every slice ordering, so symmetric data stays symmetric
        field = normalize_zero_mean(field)
    return field
