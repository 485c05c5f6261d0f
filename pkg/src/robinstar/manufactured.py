"""Manufactured solutions that satisfy the Robin conditions exactly.

Each solution is ``R0(s) + R1(s) Y(angle)`` where ``Y`` is an eigenfunction
of the angular (or ``y``) operator and the radial factors are polynomials
whose two free coefficients are fitted to the boundary conditions.  The
source follows from the separated Laplacian, so no symbolic algebra is
needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import eval_legendre

from .cylinder import CylinderField, CylinderGrid
from .sphere import ShellField, ShellGrid

__all__ = ["Manufactured", "manufactured", "make_grid"]


def _fit(base: list, free: list, conds: list) -> Polynomial:
    """``base + c . free`` with coefficients chosen so every ``cond(P) = 0``."""
    base = Polynomial(base)
    free = [Polynomial(p) for p in free]
    A = np.array([[c(p) for p in free] for c in conds])
    rhs = -np.array([c(base) for c in conds])
    coef = np.linalg.solve(A, rhs) if free else []
    out = base
    for c, p in zip(coef, free):
        out = out + c * p
    return out


def _robin_conds(a, b, alpha1, alpha2, inner: bool):
    conds = [lambda P: P.deriv()(b) + alpha2 * P(b)]
    if inner:
        conds.append(lambda P: -P.deriv()(a) + alpha1 * P(a))
    return conds


def _radial_profile(a, b, alpha1, alpha2, ball: bool, m: int) -> Polynomial:
    if ball:
        # r^m (1 + c r^2 + r^4): smooth at the centre
        pre = [0.0] * m
        return _fit(pre + [1, 0, 0, 0, 1], [pre + [0, 0, 1]],
                    _robin_conds(a, b, alpha1, alpha2, inner=False))
    return _fit([1, 0, 0, 1], [[0, 1], [0, 0, 1]],
                _robin_conds(a, b, alpha1, alpha2, inner=True))


@dataclass
class Manufactured:
    """Exact solution and source as callables of the grid mesh."""

    kind: str
    alpha1: float
    alpha2: float
    R0: Polynomial
    R1: Polynomial
    mode: int
    dim: int = 2
    ell: float = 1.0

    def _angular(self, ang):
        if self.kind == "cylinder_rect":
            return np.cos(self.mode * np.pi * ang / self.ell), (self.mode * np.pi / self.ell) ** 2
        if self.dim == 2:
            return np.cos(self.mode * ang), float(self.mode ** 2)
        return eval_legendre(self.mode, np.cos(ang)), float(self.mode * (self.mode + 1))

    def exact(self, s, ang):
        Y, _ = self._angular(ang)
        return self.R0(s) + self.R1(s) * Y

    def source(self, s, ang):
        Y, lam = self._angular(ang)

        def neg_lap(R):
            if self.kind == "cylinder_rect":
                return -R.deriv(2)(s) + lam * 0.0
            return -(R.deriv(2)(s) + (self.dim - 1) / s * R.deriv()(s))

        f0 = neg_lap(self.R0)
        f1 = neg_lap(self.R1)
        if self.kind == "cylinder_rect":
            f1 = f1 + lam * self.R1(s)
        else:
            f1 = f1 + lam * self.R1(s) / s ** 2
        return f0 + f1 * Y

    def fields(self, grid):
        cls = CylinderField if isinstance(grid, CylinderGrid) else ShellField
        return (cls.from_function(grid, self.source), cls.from_function(grid, self.exact))


def manufactured(kind: str, alpha1: float = 0.0, alpha2: float = 0.0,
                 a: float = 1.0, b: float = 2.0, ell: float = 1.0, mode: int = 2) -> Manufactured:
    """Build the manufactured pair for ``kind``; ``a, b`` are the radii or ``(0, L)``."""
    if kind == "cylinder_rect":
        R0 = _radial_profile(0.0, b, alpha1, alpha2, False, 0)
        R1 = _fit([2, 0, 0, 0, 1], [[0, 1], [0, 0, 1]], _robin_conds(0.0, b, alpha1, alpha2, True))
        return Manufactured(kind, alpha1, alpha2, R0, R1, 1, 2, ell)
    dim = 3 if kind.startswith(("shell3d", "ball3d")) else 2
    ball = kind in ("disk2d", "ball3d_axisym")
    R0 = _radial_profile(a, b, alpha1, alpha2, ball, 0)
    R1 = _radial_profile(a, b, alpha1, alpha2, ball, mode)
    return Manufactured(kind, alpha1, alpha2, R0, R1, mode, dim)


def make_grid(kind: str, n: int, a: float = 1.0, b: float = 2.0, ell: float = 1.0,
              angular_factor: int = 2):
    """Grid with ``n`` radial/axial nodes and ``angular_factor * n`` angular nodes."""
    m = angular_factor * n
    if kind == "cylinder_rect":
        return CylinderGrid(b, ell, n, m)
    dim = 3 if kind.startswith(("shell3d", "ball3d")) else 2
    inner = 0.0 if kind in ("disk2d", "ball3d_axisym") else a
    return ShellGrid.make(inner, b, dim, n, m)
