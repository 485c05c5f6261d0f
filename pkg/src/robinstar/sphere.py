"""Cap symmetrization on shells and balls, and the polar-rectangle operators.

Angular grids
-------------
``n = 2``
    ``M`` (even) uniform midpoint nodes ``phi_j = -pi + (j + 1/2) 2pi/M`` on the
    circle.  Nodes come in mirror pairs ``+-phi``; a cap ``(-theta, theta)``
    covers both members of a pair equally.
``n = 3``
    Axisymmetric fields only.  ``M`` uniform midpoint nodes in ``x = cos(theta)``,
    so every node carries the same surface measure ``4pi/M`` and a cap is a
    prefix of the nodes ordered by polar angle.

Equal node masses make the discrete spherical rearrangement a permutation of
the slice values, hence exactly equimeasurable.  The polar distance of a node
orders the nodes from the pole ``e1`` outwards (``+phi`` before ``-phi`` inside
a pair); the rearrangement writes the sorted values along that order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import WeightedSamples, star_function

__all__ = [
    "CapGeometry",
    "AngularGrid",
    "ShellGrid",
    "ShellField",
    "SphereSlice",
    "PolarRectField",
    "spherical_rearrangement",
    "cap_symmetrize",
    "j_operator",
    "star_shell",
    "delta_star_apply",
    "delta_star_adjoint_apply",
]


class CapGeometry:
    """Surface measure of the polar cap ``K(theta)`` on ``S^{n-1}``."""

    def __init__(self, dim: int):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        self.dim = dim

    @property
    def full(self) -> float:
        return 2 * np.pi if self.dim == 2 else 4 * np.pi

    def measure(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.dim == 2:
            return 2.0 * theta
        return 2 * np.pi * (1.0 - np.cos(theta))

    def angle(self, measure):
        measure = np.asarray(measure, dtype=float)
        if self.dim == 2:
            return 0.5 * measure
        return np.arccos(np.clip(1.0 - measure / (2 * np.pi), -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Nodes, masses and cap bookkeeping for one sphere slice.

    Attributes
    ----------
    nodes : ndarray
        ``phi`` for ``dim == 2``, polar angle ``theta`` for ``dim == 3``.
    weights : ndarray
        Surface measure carried by each node.
    polar : ndarray
        Spherical distance of each node to ``e1``.
    cell_lo, cell_hi : ndarray
        Cap-measure interval ``[sigma(K(lo)), sigma(K(hi))]`` swept by the
        node's cell as the cap grows.  Mirror pairs on the circle share one
        interval of twice the node mass.
    cap_order : ndarray
        Node indices sorted by distance to the pole.
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    polar: np.ndarray
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    cap_order: np.ndarray

    @classmethod
    def circle(cls, m: int) -> "AngularGrid":
        if m < 2 or m % 2:
            raise ValueError(f"circle grid needs an even node count, got {m}")
        d = 2 * np.pi / m
        phi = -np.pi + (np.arange(m) + 0.5) * d
        k = np.floor(np.abs(phi) / d).astype(int)
        # +phi ahead of -phi within a mirror pair
        order = np.lexsort((-np.sign(phi), k))
        return cls(2, phi, np.full(m, d), np.abs(phi), 2 * k * d, 2 * (k + 1) * d, order)

    @classmethod
    def sphere(cls, m: int) -> "AngularGrid":
        if m < 2:
            raise ValueError(f"sphere grid needs at least 2 nodes, got {m}")
        dx = 2.0 / m
        x = 1.0 - (np.arange(m) + 0.5) * dx
        theta = np.arccos(x)
        j = np.arange(m)
        return cls(3, theta, np.full(m, 4 * np.pi / m), theta,
                   2 * np.pi * j * dx, 2 * np.pi * (j + 1) * dx, j.copy())

    @classmethod
    def make(cls, dim: int, m: int) -> "AngularGrid":
        return cls.circle(m) if dim == 2 else cls.sphere(m)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def geometry(self) -> CapGeometry:
        return CapGeometry(self.dim)

    @property
    def spacing(self) -> float:
        """Nominal angular resolution used by the tolerance model."""
        return (2 * np.pi if self.dim == 2 else np.pi) / self.size

    def cap_edges(self, include_pi: bool = True) -> np.ndarray:
        """Polar angles at which a cap is an exact union of node cells."""
        edges = np.unique(self.cell_hi)
        theta = self.geometry.angle(edges)
        return theta if include_pi else theta[theta < np.pi - 1e-12]

    def cap_fractions(self, theta) -> np.ndarray:
        """Mass of each node inside ``K(theta)``; shape ``(M, len(theta))``.

        A cell cut by the cap boundary contributes in proportion to the cap
        measure it has swept.
        """
        s = self.geometry.measure(np.atleast_1d(theta))
        frac = (s[None, :] - self.cell_lo[:, None]) / (self.cell_hi - self.cell_lo)[:, None]
        return np.clip(frac, 0.0, 1.0) * self.weights[:, None]

    def samples(self, values) -> WeightedSamples:
        return WeightedSamples(values, self.weights)


@dataclass(frozen=True)
class SphereSlice:
    """Values of a function on one sphere (or the trace of a shell field)."""

    grid: AngularGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError(f"slice has {values.shape}, grid has {self.grid.size} nodes")
        object.__setattr__(self, "values", values)

    def samples(self) -> WeightedSamples:
        return self.grid.samples(self.values)

    def integral(self) -> float:
        return float(self.values @ self.grid.weights)


@dataclass(frozen=True, eq=False)
class ShellGrid:
    """Cell-centred radial nodes times an angular grid; ``a == 0`` is a ball."""

    a: float
    b: float
    dim: int
    nr: int
    angular: AngularGrid

    def __post_init__(self):
        if not (0 <= self.a < self.b < np.inf):
            raise ValueError(f"need 0 <= a < b, got a={self.a}, b={self.b}")
        if self.nr < 2:
            raise ValueError("need at least two radial nodes")
        if self.angular.dim != self.dim:
            raise ValueError("angular grid dimension mismatch")

    @classmethod
    def make(cls, a: float, b: float, dim: int, nr: int, m: int) -> "ShellGrid":
        return cls(float(a), float(b), dim, nr, AngularGrid.make(dim, m))

    @property
    def is_ball(self) -> bool:
        return self.a == 0

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.nr

    @property
    def r(self) -> np.ndarray:
        return self.a + (np.arange(self.nr) + 0.5) * self.h

    @property
    def shape(self):
        return (self.nr, self.angular.size)

    def radial_weights(self) -> np.ndarray:
        """Exact radial cell measures ``int r^(n-1) dr`` (midpoint rule for n=2)."""
        faces = self.a + np.arange(self.nr + 1) * self.h
        return np.diff(faces ** self.dim) / self.dim

    def cell_volumes(self) -> np.ndarray:
        """Quadrature weights of every grid node for ``int dx``."""
        return np.outer(self.radial_weights(), self.angular.weights)

    def volume(self) -> float:
        """Exact measure of the shell or ball."""
        if self.dim == 2:
            return np.pi * (self.b ** 2 - self.a ** 2)
        return 4 * np.pi / 3 * (self.b ** 3 - self.a ** 3)

    def mesh(self):
        """``(r, angle)`` arrays broadcast to the field shape."""
        return np.meshgrid(self.r, self.angular.nodes, indexing="ij")

    def same_as(self, other: "ShellGrid") -> bool:
        return (self.a == other.a and self.b == other.b and self.dim == other.dim
                and self.shape == other.shape)


@dataclass(frozen=True, eq=False)
class ShellField:
    """Grid function on a shell ``A(a, b)`` or ball ``B(0, b)``."""

    grid: ShellGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values {values.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: ShellGrid, func) -> "ShellField":
        rr, aa = grid.mesh()
        return cls(grid, np.broadcast_to(func(rr, aa), grid.shape))

    def with_values(self, values) -> "ShellField":
        return ShellField(self.grid, values)

    def slice(self, i: int) -> SphereSlice:
        return SphereSlice(self.grid.angular, self.values[i])

    def slice_integrals(self) -> np.ndarray:
        """``int_{S^{n-1}} u(r xi) dsigma`` at every radius."""
        return self.values @ self.grid.angular.weights

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.cell_volumes()))


@dataclass(frozen=True, eq=False)
class PolarRectField:
    """Function on the polar rectangle ``(a, b) x (0, pi)``.

    ``theta`` may be nonuniform.  NaN entries mark nodes where an operator
    was not evaluated (boundary ring of a stencil).
    """

    r: np.ndarray
    theta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (r.size, theta.size):
            raise ValueError("values must have shape (len(r), len(theta))")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(theta) <= 0):
            raise ValueError("polar rectangle axes must be strictly increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "values", values)

    def quadrature_weights(self) -> np.ndarray:
        """Trapezoid-type ``dr dtheta`` weights (interior-accurate)."""
        return np.outer(_widths(self.r), _widths(self.theta))

    def with_values(self, values) -> "PolarRectField":
        return PolarRectField(self.r, self.theta, values)


def _widths(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = x[1] - x[0]
    w[-1] = x[-1] - x[-2]
    return w


# --------------------------------------------------------------------------
# rearrangements

def _rearrange_rows(values: np.ndarray, order: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    out[..., order] = -np.sort(-values, axis=-1)
    return out


def spherical_rearrangement(s: SphereSlice) -> SphereSlice:
    """Symmetric decreasing rearrangement of a slice about the pole ``e1``."""
    return SphereSlice(s.grid, _rearrange_rows(s.values, s.grid.cap_order))


def cap_symmetrize(f: ShellField) -> ShellField:
    """Rearrange every radial slice of ``f``.

    The grid is cell centred, so a ball field has no node at the origin and
    the centre convention ``f#(0) = f(0)`` never needs to be applied.
    """
    return f.with_values(_rearrange_rows(f.values, f.grid.angular.cap_order))


# --------------------------------------------------------------------------
# J and the star function

def _theta_or_edges(grid: AngularGrid, theta):
    if theta is None:
        return grid.cap_edges()
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0) or np.any(theta > np.pi + 1e-12):
        raise ValueError("theta grid must lie in (0, pi]")
    return theta


def j_operator(u: ShellField, theta=None) -> PolarRectField:
    """``Ju(r, theta) = int_{K(theta)} u(r xi) dsigma`` on the polar rectangle.

    ``theta`` defaults to the cap edges of the angular grid, where the cap is
    an exact union of cells.
    """
    grid = u.grid.angular
    theta = _theta_or_edges(grid, theta)
    return PolarRectField(u.grid.r, theta, u.values @ grid.cap_fractions(theta))


def star_shell(u: ShellField, theta=None) -> PolarRectField:
    """Star function of every radial slice, read at ``sigma(K(theta))``.

    At cap edges this coincides with ``j_operator(cap_symmetrize(u))``; in
    between, the circle's mirror pairs make ``J`` of the rearrangement a chord
    of the (concave) star function, so the star profile itself is used.
    """
    grid = u.grid.angular
    theta = _theta_or_edges(grid, theta)
    s = grid.geometry.measure(theta)
    srt = -np.sort(-u.values, axis=1)
    w = grid.weights
    if np.all(w == w[0]):
        t = np.concatenate(([0.0], np.cumsum(w)))
        cum = np.concatenate((np.zeros((u.values.shape[0], 1)), np.cumsum(srt * w[0], axis=1)), axis=1)
        t[-1] = grid.geometry.full
        idx = np.clip(np.searchsorted(t, s, side="right") - 1, 0, w.size - 1)
        frac = (s - t[idx]) / (t[idx + 1] - t[idx])
        vals = cum[:, idx] + frac * (cum[:, idx + 1] - cum[:, idx])
    else:
        vals = np.array([star_function(grid.samples(row))(np.minimum(s, grid.geometry.full))
                         for row in u.values])
    return PolarRectField(u.grid.r, theta, vals)


# --------------------------------------------------------------------------
# Delta-star and its formal adjoint

def _fd_coeffs(x: np.ndarray):
    """Three-point first/second derivative weights on a nonuniform axis.

    Returns ``(d1, d2)``, each of shape ``(len(x) - 2, 3)`` for the stencil
    ``(x[i-1], x[i], x[i+1])``.
    """
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    den = hm * hp * (hm + hp)
    d1 = np.stack([-hp ** 2 / den, (hp ** 2 - hm ** 2) / den, hm ** 2 / den], axis=1)
    d2 = np.stack([2 * hp / den, -2 * (hp + hm) / den, 2 * hm / den], axis=1)
    return d1, d2


def _derivs(F: PolarRectField):
    v = F.values
    d1r, d2r = _fd_coeffs(F.r)
    d1t, d2t = _fd_coeffs(F.theta)
    core = v[1:-1, 1:-1]

    def along_r(c):
        return (c[:, 0, None] * v[:-2, 1:-1] + c[:, 1, None] * core
                + c[:, 2, None] * v[2:, 1:-1])

    def along_t(c):
        return (c[None, :, 0] * v[1:-1, :-2] + c[None, :, 1] * core
                + c[None, :, 2] * v[1:-1, 2:])

    return core, along_r(d1r), along_r(d2r), along_t(d1t), along_t(d2t)


def _check_size(F: PolarRectField):
    if F.r.size < 5 or F.theta.size < 5:
        raise ValueError("polar rectangle grid too small: need >= 5 nodes per axis")
    if F.theta[0] <= 0 or F.theta[-1] > np.pi + 1e-12:
        raise ValueError("theta axis must lie in (0, pi]")


def _interior_r_theta(F: PolarRectField):
    r = F.r[1:-1, None]
    th = F.theta[None, 1:-1]
    return r, th


def delta_star_apply(F: PolarRectField, n: int) -> PolarRectField:
    """Second-order finite differences of

    ``F_rr + (n-1)/r F_r + r^-2 [F_tt - (n-2) cot(t) F_t]``.

    Only interior nodes are evaluated; the boundary ring is NaN.
    """
    _check_size(F)
    core, fr, frr, ft, ftt = _derivs(F)
    r, th = _interior_r_theta(F)
    out = np.full(F.values.shape, np.nan)
    out[1:-1, 1:-1] = frr + (n - 1) / r * fr + (ftt - (n - 2) / np.tan(th) * ft) / r ** 2
    return F.with_values(out)


def delta_star_adjoint_apply(G: PolarRectField, n: int, margin: int = 2) -> PolarRectField:
    """Formal ``dr dtheta`` adjoint of :func:`delta_star_apply`.

    ``G`` must vanish on a ``margin``-node frame; values outside the
    interior are returned as zero (``G`` has compact support there).
    """
    _check_size(G)
    v = G.values
    frame = np.ones(v.shape, dtype=bool)
    frame[margin:-margin, margin:-margin] = False
    if np.any(v[frame] != 0):
        raise ValueError("test function support touches the grid margin")
    core, gr, grr, gt, gtt = _derivs(G)
    r, th = _interior_r_theta(G)
    out = np.zeros(v.shape)
    out[1:-1, 1:-1] = (grr - (n - 1) / r * gr + (n - 1) / r ** 2 * core
                       + (gtt + (n - 2) / np.tan(th) * gt
                          - (n - 2) / np.sin(th) ** 2 * core) / r ** 2)
    return G.with_values(out)
