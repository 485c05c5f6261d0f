"""Direct solvers for ``-Laplace(u) = f`` with Robin, Neumann or mixed data.

Every domain is handled as *transform in the angular/axial variable x
second-order finite volumes in the radial/base variable*:

``annulus2d``, ``disk2d``
    FFT in ``phi``; mode ``m`` gives ``-(r u')'/r + m^2 u/r^2 = f_m``.
``shell3d_axisym``, ``ball3d_axisym``
    Axisymmetric data on a grid uniform in ``x = cos(theta)``.  The angular
    operator ``d/dx((1 - x^2) d/dx)`` is discretised by finite volumes (its
    boundary faces carry a zero coefficient) and diagonalised; eigenvalues
    approximate ``l(l + 1)``.
``cylinder_rect``
    Cosine transform in ``y`` (Neumann top and bottom), Robin conditions at
    ``x = 0`` and ``x = L``; mode ``k`` is shifted by ``(k pi / ell)^2``.

Robin rows use a ghost value from ``du/dnu + alpha u = 0`` at the boundary
face.  On an inner sphere the outward normal points to the centre, so the
condition there reads ``-u_r + alpha1 u = 0``.  When every ``alpha`` is zero
the zero mode is singular and is solved as a bordered system that imposes a
zero domain mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.fft
from scipy.linalg import eigh_tridiagonal, solve_banded

from .cylinder import CylinderField, CylinderGrid
from .sphere import ShellField, ShellGrid

__all__ = [
    "DOMAIN_KINDS",
    "RobinProblem",
    "SolveResult",
    "solve",
    "residual_check",
    "normalize_zero_mean",
    "stability_probe",
    "field_norms",
]

Field = Union[ShellField, CylinderField]

#: kind -> (dimension, is_ball); the rectangle has no radial structure
DOMAIN_KINDS = {
    "annulus2d": (2, False),
    "disk2d": (2, True),
    "shell3d_axisym": (3, False),
    "ball3d_axisym": (3, True),
    "cylinder_rect": (2, False),
}

MEAN_TOL = 1e-10


def _weights(f: Field) -> np.ndarray:
    return f.grid.cell_volumes()


def _weighted_mean(f: Field) -> float:
    w = _weights(f)
    return float(np.sum(f.values * w) / np.sum(w))


def normalize_zero_mean(f: Field) -> Field:
    """Subtract the quadrature mean (weights ``r^(n-1) dr dsigma`` or ``dx dy``)."""
    return f.with_values(f.values - _weighted_mean(f))


@dataclass(frozen=True)
class RobinProblem:
    """``-Laplace(u) = source`` with Robin coefficients on each boundary piece.

    ``alpha1`` acts on the inner sphere (shells) or on ``x = 0`` (rectangle);
    ``alpha2`` on the outer sphere or on ``x = L``.  Balls and disks only have
    ``alpha2``.  Top and bottom of the rectangle are always Neumann.
    """

    kind: str
    source: Field
    alpha1: float = 0.0
    alpha2: float = 0.0
    zero_mean_normalization: bool = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("alpha must be nonnegative")
        grid = self.source.grid
        if self.kind == "cylinder_rect":
            if not isinstance(self.source, CylinderField) or self.source.on_edges:
                raise ValueError("cylinder_rect needs a cell-centred CylinderField source")
        else:
            dim, ball = DOMAIN_KINDS[self.kind]
            if not isinstance(self.source, ShellField):
                raise ValueError(f"{self.kind} needs a ShellField source")
            if grid.dim != dim or grid.is_ball != ball:
                raise ValueError(
                    f"{self.kind} does not match grid (dim={grid.dim}, a={grid.a})")
            if ball and self.alpha1 != 0:
                raise ValueError("a ball has no inner boundary; alpha1 must be 0")
        if self.zero_mean_normalization is None:
            object.__setattr__(self, "zero_mean_normalization", self.neumann)
        if self.neumann:
            if not self.zero_mean_normalization:
                raise ValueError("pure Neumann problem requires zero_mean_normalization")
            w = _weights(self.source)
            mass = float(np.sum(self.source.values * w))
            l1 = float(np.sum(np.abs(self.source.values) * w))
            if abs(mass) > MEAN_TOL * max(l1, np.finfo(float).tiny):
                raise ValueError(
                    f"Neumann compatibility violated: source integral {mass:.3e} is not zero")
        elif self.zero_mean_normalization:
            raise ValueError("zero-mean normalization only applies when every alpha is 0")

    @property
    def neumann(self) -> bool:
        return self.alpha1 == 0 and self.alpha2 == 0

    @property
    def grid(self):
        return self.source.grid

    def with_source(self, source: Field) -> "RobinProblem":
        return RobinProblem(self.kind, source, self.alpha1, self.alpha2,
                            self.zero_mean_normalization)


@dataclass
class SolveResult:
    problem: RobinProblem
    solution: Field
    interior_residual: float
    boundary_residual: float
    mean: float
    residual_threshold: float
    compatibility_multiplier: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.interior_residual <= self.residual_threshold


# --------------------------------------------------------------------------
# discretisation pieces

@dataclass
class _Radial:
    """Finite-volume data of the radial (or ``x``) direction."""

    h: float
    centers: np.ndarray
    p_faces: np.ndarray      # face coefficient r^(n-1), length N+1
    q_cells: np.ndarray      # cell coefficient r^(n-1), length N
    shift: np.ndarray        # multiplies the mode eigenvalue
    beta_lo: float
    beta_hi: float

    @property
    def singular(self) -> bool:
        return self.beta_hi == 0 and (self.beta_lo == 0 or self.p_faces[0] == 0)

    def banded(self, lam: float) -> np.ndarray:
        """Banded form of ``-L_r + lam * shift`` (scipy ``solve_banded`` layout)."""
        p, q, h = self.p_faces, self.q_cells, self.h
        n = q.size
        ab = np.zeros((3, n))
        upper = -p[1:-1] / (q[:-1] * h * h)
        lower = -p[1:-1] / (q[1:] * h * h)
        diag = np.zeros(n)
        diag[:-1] += p[1:-1] / (q[:-1] * h * h)
        diag[1:] += p[1:-1] / (q[1:] * h * h)
        diag[0] += p[0] * self.beta_lo / (q[0] * h)
        diag[-1] += p[-1] * self.beta_hi / (q[-1] * h)
        ab[0, 1:] = upper
        ab[1] = diag + lam * self.shift
        ab[2, :-1] = lower
        return ab


def _beta(alpha: float, h: float) -> float:
    # flux coefficient from the ghost value of du/dnu + alpha u = 0
    return alpha / (1.0 + 0.5 * alpha * h)


def _radial(problem: RobinProblem) -> _Radial:
    g = problem.grid
    if isinstance(g, CylinderGrid):
        n = g.nx
        return _Radial(g.dx, g.x, np.ones(n + 1), np.ones(n), np.ones(n),
                       _beta(problem.alpha1, g.dx), _beta(problem.alpha2, g.dx))
    faces = g.a + np.arange(g.nr + 1) * g.h
    q = g.radial_weights() / g.h
    # cell average of r^(n-3) against r^(n-1): exact in 3d, midpoint in 2d
    shift = 1.0 / g.r ** 2 if g.dim == 2 else 1.0 / q
    return _Radial(g.h, g.r, faces ** (g.dim - 1), q, shift,
                   _beta(problem.alpha1, g.h), _beta(problem.alpha2, g.h))


def _legendre_fv(m: int):
    """Diagonal and off-diagonal of the finite-volume ``d/dx((1-x^2) d/dx)``."""
    dx = 2.0 / m
    xf = 1.0 - np.arange(m + 1) * dx
    c = (1.0 - xf ** 2) / dx ** 2
    c[0] = c[-1] = 0.0
    return -(c[:-1] + c[1:]), c[1:-1]


class _Angular:
    """Angular transform with eigenvalues of ``-(angular operator)``."""

    def __init__(self, grid):
        self.grid = grid
        if isinstance(grid, CylinderGrid):
            self.kind = "cos"
            k = np.arange(grid.my)
            self.lam = (k * np.pi / grid.ell) ** 2
        elif grid.dim == 2:
            self.kind = "fft"
            m = np.arange(grid.angular.size // 2 + 1)
            self.lam = m.astype(float) ** 2
        else:
            self.kind = "legendre"
            d, e = _legendre_fv(grid.angular.size)
            mu, vec = eigh_tridiagonal(d, e)
            order = np.argsort(-mu)
            mu, vec = mu[order], vec[:, order]
            self.lam = -mu
            self.lam[0] = 0.0
            self.vec = vec
        self.zero_mode = 0

    def forward(self, values: np.ndarray) -> np.ndarray:
        if self.kind == "fft":
            return np.fft.rfft(values, axis=1).T
        if self.kind == "cos":
            return scipy.fft.dct(values, type=2, norm="ortho", axis=1).T
        return (values @ self.vec).T

    def inverse(self, modes: np.ndarray) -> np.ndarray:
        if self.kind == "fft":
            return np.fft.irfft(modes.T, n=self.grid.angular.size, axis=1)
        if self.kind == "cos":
            return scipy.fft.idct(modes.T, type=2, norm="ortho", axis=1)
        return modes.T @ self.vec.T


def _apply_modes(rad: _Radial, ang: _Angular, modes: np.ndarray) -> np.ndarray:
    out = np.empty_like(modes)
    for k, lam in enumerate(ang.lam):
        ab = rad.banded(lam)
        u = modes[k]
        y = ab[1] * u
        y[:-1] += ab[0, 1:] * u[1:]
        y[1:] += ab[2, :-1] * u[:-1]
        out[k] = y
    return out


def _bordered_solve(ab: np.ndarray, q: np.ndarray, rhs: np.ndarray):
    n = q.size
    A = np.zeros((n + 1, n + 1), dtype=rhs.dtype)
    A[np.arange(n), np.arange(n)] = ab[1]
    A[np.arange(n - 1), np.arange(1, n)] = ab[0, 1:]
    A[np.arange(1, n), np.arange(n - 1)] = ab[2, :-1]
    A[:n, n] = 1.0
    A[n, :n] = q
    sol = np.linalg.solve(A, np.concatenate((rhs, [0.0])))
    return sol[:n], sol[n]


def _operator_scale(rad: _Radial, ang: _Angular) -> float:
    """Row-sum bound of the discrete operator (a cheap condition estimate)."""
    return 4.0 / rad.h ** 2 + float(np.max(ang.lam)) * float(np.max(rad.shift))


def _boundary_defects(problem: RobinProblem, u: np.ndarray) -> np.ndarray:
    """``|du/dnu + alpha u|`` at boundary faces from quadratic extrapolation."""
    rad = _radial(problem)
    h = rad.h
    val_w = np.array([15.0, -10.0, 3.0]) / 8.0
    der_w = np.array([-2.0, 3.0, -1.0])     # h times the derivative along the inward normal

    def defect(rows, alpha, step=h):
        value = np.tensordot(val_w, rows, axes=1)
        dnu = -np.tensordot(der_w, rows, axes=1) / step
        return np.abs(dnu + alpha * value)

    parts = [defect(u[[-1, -2, -3]], problem.alpha2)]
    if isinstance(problem.grid, CylinderGrid) or not problem.grid.is_ball:
        parts.append(defect(u[[0, 1, 2]], problem.alpha1))
    if isinstance(problem.grid, CylinderGrid):
        dy = problem.grid.dy
        parts.append(defect(u.T[[0, 1, 2]], 0.0, dy))
        parts.append(defect(u.T[[-1, -2, -3]], 0.0, dy))
    return np.concatenate([p.ravel() for p in parts])


def solve(problem: RobinProblem) -> SolveResult:
    """Solve the discrete problem exactly (up to rounding) by direct methods."""
    rad = _radial(problem)
    ang = _Angular(problem.grid)
    f = problem.source.values
    fhat = ang.forward(f)
    uhat = np.empty_like(fhat)
    multiplier = 0.0
    for k, lam in enumerate(ang.lam):
        ab = rad.banded(lam)
        if k == ang.zero_mode and rad.singular:
            uhat[k], multiplier = _bordered_solve(ab, rad.q_cells, fhat[k])
        else:
            uhat[k] = solve_banded((1, 1), ab, fhat[k])
    u = np.real(ang.inverse(uhat)) if ang.kind != "fft" else ang.inverse(uhat)
    solution = problem.source.with_values(u)

    res = ang.inverse(_apply_modes(rad, ang, uhat) - fhat)
    interior = float(np.max(np.abs(res)))
    fscale = float(np.max(np.abs(f)))
    uscale = float(np.max(np.abs(u)))
    threshold = max(1e-8 * fscale,
                    1e3 * np.finfo(float).eps * _operator_scale(rad, ang) * uscale)
    return SolveResult(
        problem=problem,
        solution=solution,
        interior_residual=interior,
        boundary_residual=float(np.max(_boundary_defects(problem, u))),
        mean=_weighted_mean(solution),
        residual_threshold=threshold,
        compatibility_multiplier=float(np.abs(multiplier)),
    )


# --------------------------------------------------------------------------
# a posteriori checks

def _fourier_d2_matrix(m: int) -> np.ndarray:
    """Dense spectral second-derivative matrix on ``m`` periodic nodes (m even)."""
    h = 2 * np.pi / m
    k = np.arange(m)
    col = np.empty(m)
    col[0] = -np.pi ** 2 / (3 * h ** 2) - 1.0 / 6.0
    kk = k[1:]
    col[1:] = -0.5 * (-1.0) ** kk / np.sin(0.5 * h * kk) ** 2
    idx = (k[:, None] - k[None, :]) % m
    return col[idx]


def _angular_matrix(grid) -> np.ndarray:
    if isinstance(grid, CylinderGrid):
        C = scipy.fft.dct(np.eye(grid.my), type=2, norm="ortho", axis=0)
        lam = (np.arange(grid.my) * np.pi / grid.ell) ** 2
        return -C.T @ (lam[:, None] * C)
    m = grid.angular.size
    if grid.dim == 2:
        return _fourier_d2_matrix(m)
    d, e = _legendre_fv(m)
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def _operator_direct(problem: RobinProblem, u: np.ndarray, absolute: bool = False) -> np.ndarray:
    """Discrete Laplacian applied in physical space with explicit face fluxes.

    With ``absolute=True`` every coefficient and value is replaced by its
    modulus, which bounds the rounding error of the plain evaluation.
    """
    if absolute:
        u = np.abs(u)
    g = problem.grid
    if isinstance(g, CylinderGrid):
        h, n = g.dx, g.nx
        p = np.ones(n + 1)
        q = np.ones(n)
        shift = np.ones(n)
    else:
        h, n = g.h, g.nr
        rf = g.a + h * np.arange(n + 1)
        p = rf ** (g.dim - 1)
        q = np.diff(rf ** g.dim) / (g.dim * h)
        shift = 1.0 / g.r ** 2 if g.dim == 2 else 1.0 / q
    sgn = 1.0 if absolute else -1.0
    flux = np.zeros((n + 1, u.shape[1]))
    flux[1:-1] = p[1:-1, None] * (u[1:] + sgn * u[:-1]) / h
    flux[-1] = sgn * p[-1] * problem.alpha2 / (1 + 0.5 * problem.alpha2 * h) * u[-1]
    flux[0] = p[0] * problem.alpha1 / (1 + 0.5 * problem.alpha1 * h) * u[0]
    radial = (flux[1:] + sgn * flux[:-1]) / (q[:, None] * h)
    ang = _angular_matrix(g)
    if absolute:
        ang = np.abs(ang)
    return radial + shift[:, None] * (u @ ang.T)


def residual_check(problem: RobinProblem, result: SolveResult, agree_tol: float = 1e-9) -> dict:
    """Recompute residuals by an independent route and compare with ``result``.

    Returns a dict with the recomputed residuals, agreement flags and
    ``passed`` (interior residual under threshold and both residuals agree).
    """
    sol = result.solution
    if type(sol) is not type(problem.source) or not sol.grid.same_as(problem.grid):
        raise ValueError("grid mismatch between problem and result")
    u = sol.values
    f = problem.source.values
    interior = float(np.max(np.abs(_operator_direct(problem, u) + f)))
    bvals = _boundary_defects_polyfit(problem, u)
    boundary = float(np.max(bvals))
    scale = max(1.0, float(np.max(np.abs(f))))
    # dot-product rounding bound: (length + 4) * eps * (|L| |u| + |f|)
    terms = u.shape[1] + 4
    floor = terms * np.finfo(float).eps * float(np.max(_operator_direct(problem, u, absolute=True)
                                                    + np.abs(f)))
    interior_agree = abs(interior - result.interior_residual) <= max(agree_tol * scale, floor)
    boundary_agree = abs(boundary - result.boundary_residual) <= agree_tol * scale
    return {
        "interior_residual": interior,
        "roundoff_floor": float(floor),
        "boundary_residual": boundary,
        "interior_agree": bool(interior_agree),
        "boundary_agree": bool(boundary_agree),
        "interior_ok": bool(interior <= result.residual_threshold),
        "passed": bool(interior_agree and boundary_agree
                       and interior <= result.residual_threshold),
    }


def _boundary_defects_polyfit(problem: RobinProblem, u: np.ndarray) -> np.ndarray:
    rad = _radial(problem)
    s = np.array([0.5, 1.5, 2.5]) * rad.h

    def defect(rows, alpha):
        coef = np.polynomial.polynomial.polyfit(s, rows, 2)
        value = coef[0]
        dnu = -coef[1]
        return np.abs(dnu + alpha * value)

    parts = [defect(u[[-1, -2, -3]], problem.alpha2)]
    g = problem.grid
    if isinstance(g, CylinderGrid) or not g.is_ball:
        parts.append(defect(u[[0, 1, 2]], problem.alpha1))
    if isinstance(g, CylinderGrid):
        sy = np.array([0.5, 1.5, 2.5]) * g.dy
        for rows in (u.T[[0, 1, 2]], u.T[[-1, -2, -3]]):
            coef = np.polynomial.polynomial.polyfit(sy, rows, 2)
            parts.append(np.abs(coef[1]))
    return np.concatenate([np.ravel(p) for p in parts])


# --------------------------------------------------------------------------
# norms and continuous dependence

def field_norms(f: Field) -> dict:
    """Discrete ``L2`` and ``H1`` norms built from cell and face differences."""
    g = f.grid
    v = f.values
    l2sq = float(np.sum(v ** 2 * g.cell_volumes()))
    if isinstance(g, CylinderGrid):
        gx = np.diff(v, axis=0) / g.dx
        gy = np.diff(v, axis=1) / g.dy
        grad = float(np.sum(gx ** 2) + np.sum(gy ** 2)) * g.dx * g.dy
    else:
        h = g.h
        rf = g.a + h * np.arange(1, g.nr)
        w = g.angular.weights
        gr = np.diff(v, axis=0) / h
        grad = float(np.sum(gr ** 2 * (rf ** (g.dim - 1) * h)[:, None] * w[None, :]))
        if g.dim == 2:
            d = 2 * np.pi / g.angular.size
            gp = (np.roll(v, -1, axis=1) - v) / (g.r[:, None] * d)
            grad += float(np.sum(gp ** 2 * (g.r * h)[:, None] * d))
        else:
            m = g.angular.size
            dx = 2.0 / m
            xf = 1.0 - np.arange(1, m) * dx
            gx = np.diff(v, axis=1) / dx
            # |grad_S u|^2 = (1 - x^2) u_x^2 on the unit sphere, area element 2 pi dx
            grad += float(np.sum(gx ** 2 * (1 - xf ** 2)[None, :])) * 2 * np.pi * dx * h
    return {"L2": float(np.sqrt(l2sq)), "H1": float(np.sqrt(l2sq + grad))}


def stability_probe(problem: RobinProblem, perturbation_scale: float = 1.0,
                    delta: Field = None, seed: int = 0) -> float:
    """``||u_delta - u||_H1 / ||delta f||_L2`` with ``delta f = perturbation_scale * delta``.

    ``delta`` defaults to a seeded band-limited field on the problem grid
    (projected to zero mean for pure Neumann problems).  The problem is
    linear, so the ratio does not depend on ``perturbation_scale`` or on the
    unperturbed source.
    """
    if delta is None:
        from .sources import SourceSpec, generate_source
        delta = generate_source(SourceSpec("bandlimited", seed, max_mode=4), problem.grid,
                                problem.kind, problem.alpha1, problem.alpha2)
    if not delta.grid.same_as(problem.grid):
        raise ValueError("perturbation grid does not match the problem grid")
    d = delta.values * perturbation_scale
    dnorm = field_norms(delta.with_values(d))["L2"]
    if dnorm == 0:
        return 0.0
    base = solve(problem).solution.values
    pert = solve(problem.with_source(problem.source.with_values(problem.source.values + d)))
    diff = pert.solution.with_values(pert.solution.values - base)
    return field_norms(diff)["H1"] / dnorm
