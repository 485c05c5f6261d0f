"""Finite discrete measure spaces, decreasing rearrangements and star functions.

A :class:`WeightedSamples` is a function sampled on finitely many atoms, each
atom carrying a positive mass.  Everything downstream (sphere slices, cylinder
columns) reduces to this representation.

The star function computed here is the one of the *nonatomic* space obtained
by letting every atom be split continuously, i.e. the running integral of the
decreasing rearrangement.  On an atomic space the best subset of prescribed
measure can do worse than that when the measure falls strictly inside an atom;
:func:`star_brute_force` enumerates subsets and exposes exactly that gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "EQ_TOL",
    "WeightedSamples",
    "DecreasingProfile",
    "StarProfile",
    "is_rearrangement",
    "decreasing_rearrangement",
    "star_function",
    "star_brute_force",
    "star_brute_force_table",
    "convex_means_compare",
    "lp_compare_report",
    "ConvexMeansReport",
    "LpReport",
]

#: default relative tolerance for comparing measures (scaled by total mass)
EQ_TOL = 1e-12

#: the exponential oracle refuses more atoms than this
BRUTE_FORCE_MAX_ATOMS = 20


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class WeightedSamples:
    """Function values on a finite measure space of atoms.

    Parameters
    ----------
    values : array_like
        Function value on each atom.
    weights : array_like
        Mass of each atom, strictly positive.
    """

    values: np.ndarray
    weights: np.ndarray
    total_mass: float = field(init=False)

    def __post_init__(self):
        values = _frozen(self.values)
        weights = _frozen(self.weights)
        if values.size == 0:
            raise ValueError("WeightedSamples needs at least one atom")
        if values.shape != weights.shape:
            raise ValueError(
                f"values ({values.size}) and weights ({weights.size}) differ in length")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "total_mass", math.fsum(weights))

    @classmethod
    def uniform(cls, values, total_mass: float = None) -> "WeightedSamples":
        """Atoms of equal mass; ``total_mass`` defaults to the atom count."""
        values = np.asarray(values, dtype=float).ravel()
        n = values.size
        w = 1.0 if total_mass is None else total_mass / n
        return cls(values, np.full(n, w))

    def __len__(self):
        return self.values.size

    def integral(self, phi=None) -> float:
        """Integral of ``phi(f)`` (or of ``f`` itself when ``phi`` is None)."""
        vals = self.values if phi is None else np.asarray(phi(self.values), dtype=float)
        return math.fsum(vals * self.weights)

    def mean(self) -> float:
        return self.integral() / self.total_mass

    def eq_tol(self, rel: float = EQ_TOL) -> float:
        return rel * self.total_mass


@dataclass(frozen=True)
class DecreasingProfile:
    """Step function ``f*`` on ``[0, total_mass]``.

    ``plateau_values[i]`` is taken on ``[breakpoints[i], breakpoints[i+1])``.
    """

    breakpoints: np.ndarray
    plateau_values: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, t):
        """Evaluate ``f*(t)`` with the right-continuous convention.

        ``f*(0)`` is the maximum and ``f*(total_mass)`` the minimum value.
        """
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        idx = np.clip(idx, 0, self.plateau_values.size - 1)
        return self.plateau_values[idx]


@dataclass(frozen=True)
class StarProfile:
    """Concave piecewise-linear ``F(t) = int_0^t f*(s) ds``."""

    breakpoints: np.ndarray
    node_values: np.ndarray

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.node_values) / np.diff(self.breakpoints)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        tm = self.breakpoints[-1]
        if np.any(t < -EQ_TOL * tm) or np.any(t > tm * (1 + EQ_TOL)):
            raise ValueError(f"t outside [0, {tm}]")
        return np.interp(t, self.breakpoints, self.node_values)


def decreasing_rearrangement(f: WeightedSamples) -> DecreasingProfile:
    """Decreasing rearrangement of a discrete function.

    Equal values are merged into one plateau.  Masses are accumulated in a
    canonical order (by value, then by weight) so the result does not depend
    on the order of the atoms.
    """
    order = np.lexsort((f.weights, f.values))[::-1]
    vals = f.values[order]
    wts = f.weights[order]
    starts = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
    plateau = vals[starts]
    gaps = np.add.reduceat(wts, starts)
    breakpoints = np.concatenate(([0.0], np.cumsum(gaps)))
    breakpoints[-1] = f.total_mass
    breakpoints.flags.writeable = False
    plateau.flags.writeable = False
    return DecreasingProfile(breakpoints, plateau)


def star_function(f: WeightedSamples) -> StarProfile:
    """Star function ``F(t) = max_{mu(E)=t} int_E f`` on the split-atom space."""
    prof = decreasing_rearrangement(f)
    nodes = np.concatenate(([0.0], np.cumsum(prof.plateau_values * prof.gaps)))
    nodes.flags.writeable = False
    return StarProfile(prof.breakpoints, nodes)


def _distribution(f: WeightedSamples, levels: np.ndarray) -> np.ndarray:
    """``mu({f > t})`` for every ``t`` in ``levels``."""
    order = np.argsort(f.values, kind="stable")
    vals = f.values[order]
    tail = np.concatenate((np.cumsum(f.weights[order][::-1])[::-1], [0.0]))
    return tail[np.searchsorted(vals, levels, side="right")]


def is_rearrangement(f: WeightedSamples, g: WeightedSamples, eq_tol: float = None,
                     return_diagnostic: bool = False):
    """Whether ``f`` and ``g`` have the same distribution function.

    Step functions only change distribution at their values, so comparing
    ``mu({f > t})`` on the merged value set (plus one level below everything)
    is sufficient.

    Parameters
    ----------
    eq_tol : float, optional
        Absolute tolerance on measures; defaults to ``1e-12 * total_mass``.
    return_diagnostic : bool
        Also return a dict with the worst level and the mismatch there.
    """
    if eq_tol is None:
        eq_tol = EQ_TOL * max(f.total_mass, g.total_mass)
    levels = np.union1d(f.values, g.values)
    levels = np.concatenate(([levels[0] - 1.0], levels))
    diff = np.abs(_distribution(f, levels) - _distribution(g, levels))
    worst = int(np.argmax(diff))
    ok = bool(diff[worst] <= eq_tol)
    if not return_diagnostic:
        return ok
    diag = {
        "level": float(levels[worst]),
        "mismatch": float(diff[worst]),
        "total_mass_f": f.total_mass,
        "total_mass_g": g.total_mass,
    }
    return ok, diag


def _subsets(f: WeightedSamples):
    n = len(f)
    if n > BRUTE_FORCE_MAX_ATOMS:
        raise ValueError(f"oracle size limit: {n} atoms > {BRUTE_FORCE_MAX_ATOMS}")
    masks = np.arange(1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    return bits @ f.weights, bits @ (f.values * f.weights)


def star_brute_force(f: WeightedSamples, t: float, eq_tol: float = None) -> float:
    """Best integral of ``f`` over a subset of atoms with total mass ``t``.

    Enumerates all ``2**n`` subsets, so ``n`` is capped at 20.
    """
    if eq_tol is None:
        eq_tol = f.eq_tol()
    measure, sums = _subsets(f)
    hit = np.abs(measure - t) <= eq_tol
    if not np.any(hit):
        raise ValueError(f"no subset of measure t={t!r}")
    return float(np.max(sums[hit]))


def star_brute_force_table(f: WeightedSamples, eq_tol: float = None):
    """:func:`star_brute_force` at every achievable measure in one enumeration.

    Subset measures closer than ``eq_tol`` are merged.  Returns
    ``(t, best)`` with ``t`` the smallest measure of each group.
    """
    if eq_tol is None:
        eq_tol = f.eq_tol()
    measure, sums = _subsets(f)
    order = np.argsort(measure, kind="stable")
    measure, sums = measure[order], sums[order]
    starts = np.flatnonzero(np.r_[True, np.diff(measure) > eq_tol])
    return measure[starts], np.maximum.reduceat(sums, starts)


def achievable_measures(f: WeightedSamples) -> np.ndarray:
    """All distinct subset measures (for small spaces)."""
    return np.unique(_subsets(f)[0])


# --------------------------------------------------------------------------
# majorization

@dataclass
class ConvexMeansReport:
    """Outcome of comparing convex means of ``u`` and ``v``.

    Margins are ``int phi(u) - int phi(v)``; a comparison passes when the
    margin is at most ``tol``.
    """

    require_increasing: bool
    tol: float
    mean_difference: float
    hinge_levels: np.ndarray
    hinge_margins: np.ndarray
    reverse_hinge_margins: np.ndarray | None
    named_margins: dict
    star_margin: float
    star_argmax: float
    verdict_phi: bool
    verdict_star: bool
    misuse: bool

    @property
    def verdict(self) -> bool:
        return self.verdict_phi and self.verdict_star

    @property
    def agree(self) -> bool:
        return self.verdict_phi == self.verdict_star

    @property
    def worst_margin(self) -> float:
        m = [float(np.max(self.hinge_margins)), self.star_margin]
        if self.reverse_hinge_margins is not None:
            m.append(float(np.max(self.reverse_hinge_margins)))
        m.extend(v for k, v in self.named_margins.items()
                 if not self.require_increasing or k == "exp")
        return max(m)


def _hinge_integrals(f: WeightedSamples, levels: np.ndarray) -> np.ndarray:
    """``int max(f - c, 0)`` for every ``c`` in ``levels``."""
    order = np.argsort(f.values, kind="stable")
    vals = f.values[order]
    wts = f.weights[order]
    tail_w = np.concatenate((np.cumsum(wts[::-1])[::-1], [0.0]))
    tail_vw = np.concatenate((np.cumsum((vals * wts)[::-1])[::-1], [0.0]))
    k = np.searchsorted(vals, levels, side="right")
    return tail_vw[k] - levels * tail_w[k]


def _star_on(f: WeightedSamples, t: np.ndarray) -> np.ndarray:
    prof = star_function(f)
    return np.interp(t, prof.breakpoints, prof.node_values)


def convex_means_compare(u: WeightedSamples, v: WeightedSamples,
                         require_increasing: bool = True, tol: float = None,
                         eq_tol: float = None) -> ConvexMeansReport:
    """Check ``int phi(u) <= int phi(v)`` over a finite certificate family.

    The hinge functions ``max(x - c, 0)`` with ``c`` at every value of either
    function (and at midpoints between consecutive values) decide the
    increasing-convex case for step functions.  ``x**2``, ``|x|`` and
    ``exp(x/scale)`` are evaluated as well.  With ``require_increasing=False``
    the reversed hinges ``max(c - x, 0)`` are added; that family is only
    meaningful when the means agree, which is recorded in ``misuse``.

    The star-profile comparison ``u* <= v*`` at all breakpoints is computed
    independently and reported alongside.
    """
    if eq_tol is None:
        eq_tol = EQ_TOL * max(u.total_mass, v.total_mass)
    if abs(u.total_mass - v.total_mass) > eq_tol:
        raise ValueError(
            f"total mass mismatch: {u.total_mass!r} vs {v.total_mass!r}")
    if tol is None:
        scale = max(np.max(np.abs(u.values)), np.max(np.abs(v.values)), 1.0)
        tol = 64 * EQ_TOL * scale * u.total_mass

    merged = np.union1d(u.values, v.values)
    levels = np.concatenate(([merged[0] - 1.0], merged, 0.5 * (merged[1:] + merged[:-1])))
    levels.sort()
    hinge = _hinge_integrals(u, levels) - _hinge_integrals(v, levels)

    scale = max(np.max(np.abs(merged)), 1.0)
    named = {
        "square": u.integral(np.square) - v.integral(np.square),
        "abs": u.integral(np.abs) - v.integral(np.abs),
        "exp": u.integral(lambda x: np.exp(x / scale)) - v.integral(lambda x: np.exp(x / scale)),
    }
    mean_diff = u.integral() - v.integral()

    reverse = None
    if not require_increasing:
        # int (c - f)_+ = int (f - c)_+ - int f + c * mass
        reverse = hinge - mean_diff
    misuse = (not require_increasing) and abs(mean_diff) > tol

    t = np.union1d(star_function(u).breakpoints, star_function(v).breakpoints)
    star_gap = _star_on(u, t) - _star_on(v, t)
    k = int(np.argmax(star_gap))

    phi_margins = [np.max(hinge), named["exp"]]
    if not require_increasing:
        phi_margins += [np.max(reverse), named["square"], named["abs"]]
    return ConvexMeansReport(
        require_increasing=require_increasing,
        tol=tol,
        mean_difference=mean_diff,
        hinge_levels=levels,
        hinge_margins=hinge,
        reverse_hinge_margins=reverse,
        named_margins=named,
        star_margin=float(star_gap[k]),
        star_argmax=float(t[k]),
        verdict_phi=bool(max(phi_margins) <= tol),
        verdict_star=bool(star_gap[k] <= tol),
        misuse=bool(misuse),
    )


@dataclass
class LpReport:
    """Norm and extreme-value comparison; every margin is ``u-side - v-side``."""

    norms_u: dict
    norms_v: dict
    margins: dict
    tol: float

    @property
    def verdict(self) -> bool:
        return all(m <= self.tol for m in self.margins.values())

    @property
    def worst_margin(self) -> float:
        return max(self.margins.values())


def _lp_norm(f: WeightedSamples, p: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(f.values)))
    return f.integral(lambda x: np.abs(x) ** p) ** (1.0 / p)


def lp_compare_report(u: WeightedSamples, v: WeightedSamples,
                      p_list: Sequence[float] = (1, 2), means_equal: bool = False,
                      nonneg: bool = False, tol: float = 0.0) -> LpReport:
    """Compare ``L^p`` norms (and extremes) of ``u`` and ``v``.

    The caller asserts ``u* <= v*``.  Norm domination then needs either equal
    means or nonnegative functions; with equal means the ess sup, ess inf and
    oscillation are compared too (the inf margin is ``inf v - inf u``).
    """
    if not (means_equal or nonneg):
        raise ValueError(
            "Lp comparison hypotheses unmet: need equal means or nonnegative data")
    ps = sorted(set(float(p) for p in p_list) | {math.inf})
    norms_u = {p: _lp_norm(u, p) for p in ps}
    norms_v = {p: _lp_norm(v, p) for p in ps}
    margins = {f"L{p:g}": norms_u[p] - norms_v[p] for p in ps}
    if means_equal:
        su, sv = float(np.max(u.values)), float(np.max(v.values))
        iu, iv = float(np.min(u.values)), float(np.min(v.values))
        margins["esssup"] = su - sv
        margins["essinf"] = iv - iu
        margins["osc"] = (su - iu) - (sv - iv)
    return LpReport(norms_u, norms_v, margins, tol)
