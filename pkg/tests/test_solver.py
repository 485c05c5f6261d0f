import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinstar.cylinder import CylinderField, CylinderGrid, y_rearrange
from robinstar.manufactured import make_grid, manufactured
from robinstar.solver import (RobinProblem, field_norms, normalize_zero_mean, residual_check,
                              solve, stability_probe)
from robinstar.sources import Geometry, SourceSpec, build_grid, generate_source
from robinstar.sphere import ShellField, ShellGrid, cap_symmetrize

KINDS = ["annulus2d", "disk2d", "shell3d_axisym", "ball3d_axisym", "cylinder_rect"]
ALPHAS = {
    "annulus2d": [(0, 0), (1, 0), (0, 1), (1, 2)],
    "shell3d_axisym": [(0, 0), (1, 0), (0, 1), (1, 2)],
    "cylinder_rect": [(0, 0), (1, 0), (0, 1), (1, 2)],
    "disk2d": [(0, 0), (0, 1)],
    "ball3d_axisym": [(0, 0), (0, 1)],
}
CASES = [(k, a1, a2) for k in KINDS for a1, a2 in ALPHAS[k]]


def source(kind, a1=0.0, a2=0.0, n=16, seed=0, skind="bandlimited"):
    grid = build_grid(kind, Geometry.default(kind), n, 2 * n)
    return generate_source(SourceSpec(skind, seed), grid, kind, a1, a2)


def sup_error(kind, a1, a2, n):
    ms = manufactured(kind, a1, a2, a=0.0 if kind in ("disk2d", "ball3d_axisym") else 1.0,
                      b=1.0 if kind in ("disk2d", "ball3d_axisym", "cylinder_rect") else 2.0)
    grid = make_grid(kind, n, a=1.0, b=1.0 if kind in ("disk2d", "ball3d_axisym", "cylinder_rect")
                     else 2.0)
    f, exact = ms.fields(grid)
    if a1 == 0 and a2 == 0:
        # the discrete source mean is O(h^2); project both sides
        f, exact = normalize_zero_mean(f), normalize_zero_mean(exact)
    u = solve(RobinProblem(kind, f, a1, a2)).solution
    return np.max(np.abs(u.values - exact.values))


# --------------------------------------------------------------------------
# problem validation

def test_negative_alpha_rejected():
    with pytest.raises(ValueError, match="alpha must be nonnegative"):
        RobinProblem("annulus2d", source("annulus2d", 1, 1), -1.0, 1.0)


def test_neumann_compatibility():
    grid = ShellGrid.make(1, 2, 2, 8, 16)
    with pytest.raises(ValueError, match="Neumann compatibility violated"):
        RobinProblem("annulus2d", ShellField(grid, np.ones(grid.shape)))
    with pytest.raises(ValueError, match="requires zero_mean_normalization"):
        RobinProblem("annulus2d", ShellField(grid, np.zeros(grid.shape)),
                     zero_mean_normalization=False)


@pytest.mark.parametrize("kind, grid, msg", [
    ("annulus2d", ShellGrid.make(0, 1, 2, 8, 16), "does not match grid"),
    ("shell3d_axisym", ShellGrid.make(1, 2, 2, 8, 16), "does not match grid"),
    ("cylinder_rect", ShellGrid.make(1, 2, 2, 8, 16), "CylinderField"),
    ("torus", ShellGrid.make(1, 2, 2, 8, 16), "unknown domain kind"),
])
def test_kind_grid_mismatch(kind, grid, msg):
    with pytest.raises(ValueError, match=msg):
        RobinProblem(kind, ShellField(grid, np.zeros(grid.shape)), 1.0, 1.0)


def test_ball_has_no_inner_alpha():
    with pytest.raises(ValueError, match="no inner boundary"):
        RobinProblem("disk2d", source("disk2d", 0, 1), 1.0, 1.0)


# --------------------------------------------------------------------------
# solve

@pytest.mark.parametrize("kind, a1, a2", [c for c in CASES if c[1] + c[2] > 0])
def test_zero_source_gives_zero(kind, a1, a2):
    f = source(kind, a1, a2)
    res = solve(RobinProblem(kind, f.with_values(np.zeros(f.values.shape)), a1, a2))
    assert not np.any(res.solution.values)
    assert res.interior_residual == 0 and res.boundary_residual == 0


@pytest.mark.parametrize("kind, a1, a2", CASES)
def test_residuals_small_and_mean(kind, a1, a2):
    f = source(kind, a1, a2, n=32)
    res = solve(RobinProblem(kind, f, a1, a2))
    assert res.ok
    assert res.interior_residual <= 1e-8 * max(1.0, np.max(np.abs(f.values))) * 1e3
    assert np.isfinite(res.boundary_residual)
    if a1 == 0 and a2 == 0:
        assert abs(res.mean) <= 1e-10


@pytest.mark.parametrize("alphas", [(0.0, 0.0), (1.0, 0.0), (0.3, 2.5)])
def test_annulus_bump_second_order(alphas):
    # u = (r - 1)^2 (2 - r)^2 has u = u_r = 0 at both radii, so every Robin condition holds
    def exact(r, p):
        return (r - 1) ** 2 * (2 - r) ** 2 + 0 * p

    def lap(r, p):
        # u'' + u'/r with u = q^2, q = (r - 1)(2 - r)
        q, dq = (r - 1) * (2 - r), 3 - 2 * r
        return 2 * dq ** 2 - 4 * q + 2 * q * dq / r + 0 * p

    errs = []
    for n in (32, 64, 128):
        grid = ShellGrid.make(1, 2, 2, n, 8)
        f = ShellField.from_function(grid, lambda r, p: -lap(r, p))
        u_ex = ShellField.from_function(grid, exact)
        if alphas == (0.0, 0.0):
            f, u_ex = normalize_zero_mean(f), normalize_zero_mean(u_ex)
        u = solve(RobinProblem("annulus2d", f, *alphas)).solution
        errs.append(np.max(np.abs(u.values - u_ex.values)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6)), ratios


@pytest.mark.parametrize("kind, lap_const, lap_r2", [("disk2d", -8.0, 16.0),
                                                     ("ball3d_axisym", -12.0, 20.0)])
def test_ball_bump_second_order(kind, lap_const, lap_r2):
    # u = (1 - r^2)^2: Laplace u = -8 + 16 r^2 (n = 2) and -12 + 20 r^2 (n = 3)
    errs = []
    for n in (32, 64, 128):
        grid = build_grid(kind, Geometry.default(kind), n, 8)
        f = ShellField.from_function(grid, lambda r, p: -(lap_const + lap_r2 * r ** 2) + 0 * p)
        u_ex = ShellField.from_function(grid, lambda r, p: (1 - r ** 2) ** 2 + 0 * p)
        u = solve(RobinProblem(kind, f, 0.0, 1.0)).solution
        errs.append(np.max(np.abs(u.values - u_ex.values)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6)), ratios


def test_cylinder_bump_second_order():
    # u = x^2 (1 - x)^2 cos(pi y): u = u_x = 0 at x in {0, 1}, u_y = 0 at y in {0, 1}
    def p(x):
        return x ** 2 * (1 - x) ** 2

    def f_fn(x, y):
        return -(2 - 12 * x + 12 * x ** 2 - np.pi ** 2 * p(x)) * np.cos(np.pi * y)

    errs = []
    for n in (32, 64, 128):
        grid = CylinderGrid(1.0, 1.0, n, n)
        f = CylinderField.from_function(grid, f_fn)
        u_ex = CylinderField.from_function(grid, lambda x, y: p(x) * np.cos(np.pi * y))
        u = solve(RobinProblem("cylinder_rect", f, 1.0, 2.0)).solution
        errs.append(np.max(np.abs(u.values - u_ex.values)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6)), ratios


@pytest.mark.parametrize("kind, a1, a2", CASES)
def test_manufactured_ratio_at_coarse_levels(kind, a1, a2):
    errs = [sup_error(kind, a1, a2, n) for n in (16, 32, 64)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6)), ratios


@pytest.mark.parametrize("kind, a1, a2", [("annulus2d", 1, 2), ("disk2d", 0, 0),
                                          ("shell3d_axisym", 0, 1), ("cylinder_rect", 1, 0)])
def test_linearity(kind, a1, a2):
    f, g = source(kind, a1, a2, seed=1), source(kind, a1, a2, seed=2)
    a, b = 1.7, -0.6
    u = solve(RobinProblem(kind, f, a1, a2)).solution.values
    v = solve(RobinProblem(kind, g, a1, a2)).solution.values
    w = solve(RobinProblem(kind, f.with_values(a * f.values + b * g.values), a1, a2)).solution.values
    np.testing.assert_allclose(w, a * u + b * v, atol=1e-10 * np.max(np.abs(w)))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["annulus2d", "disk2d"]), st.integers(0, 31), st.integers(0, 1000))
def test_rotation_equivariance(kind, shift, seed):
    a2 = 1.0
    f = source(kind, 0.0, a2, seed=seed)
    u = solve(RobinProblem(kind, f, 0.0, a2)).solution.values
    rot = f.with_values(np.roll(f.values, shift, axis=1))
    ur = solve(RobinProblem(kind, rot, 0.0, a2)).solution.values
    np.testing.assert_allclose(ur, np.roll(u, shift, axis=1), atol=1e-12 * np.max(np.abs(u)))


@pytest.mark.parametrize("kind, a1, a2", [("annulus2d", 1, 2), ("shell3d_axisym", 0, 0),
                                          ("disk2d", 0, 1), ("cylinder_rect", 0, 1)])
def test_symmetric_data_gives_symmetric_solution(kind, a1, a2):
    f = source(kind, a1, a2, n=32, skind="symmetric")
    u = solve(RobinProblem(kind, f, a1, a2)).solution
    us = y_rearrange(u) if kind == "cylinder_rect" else cap_symmetrize(u)
    assert np.max(np.abs(u.values - us.values)) <= 1e-12 * max(1.0, np.max(np.abs(u.values)))


# --------------------------------------------------------------------------
# residual check

@pytest.mark.parametrize("kind, a1, a2", CASES)
def test_residual_check_passes(kind, a1, a2):
    p = RobinProblem(kind, source(kind, a1, a2, n=24), a1, a2)
    diag = residual_check(p, solve(p))
    assert diag["passed"], diag


@pytest.mark.parametrize("kind", ["annulus2d", "ball3d_axisym", "cylinder_rect"])
def test_residual_check_detects_noise(kind):
    a2 = 1.0
    p = RobinProblem(kind, source(kind, 0, a2, n=24), 0.0, a2)
    res = solve(p)
    noise = 1e-3 * np.random.default_rng(0).standard_normal(res.solution.values.shape)
    bad = dataclasses.replace(res, solution=res.solution.with_values(res.solution.values + noise))
    diag = residual_check(p, bad)
    assert not diag["passed"]
    assert not diag["interior_agree"]
    assert diag["interior_residual"] > 1e3 * res.interior_residual


def test_residual_check_zero_source():
    grid = ShellGrid.make(1, 2, 2, 8, 16)
    p = RobinProblem("annulus2d", ShellField(grid, np.zeros(grid.shape)), 1.0, 1.0)
    diag = residual_check(p, solve(p))
    assert diag["interior_residual"] == 0 and diag["boundary_residual"] == 0 and diag["passed"]


def test_residual_check_grid_mismatch():
    p = RobinProblem("annulus2d", source("annulus2d", 1, 1, n=16), 1.0, 1.0)
    q = RobinProblem("annulus2d", source("annulus2d", 1, 1, n=8), 1.0, 1.0)
    with pytest.raises(ValueError, match="grid mismatch"):
        residual_check(p, solve(q))


# --------------------------------------------------------------------------
# normalization and stability

def test_normalize_constant_and_idempotent():
    grid = ShellGrid.make(1, 2, 3, 8, 12)
    c = ShellField(grid, np.full(grid.shape, 4.2))
    assert np.max(np.abs(normalize_zero_mean(c).values)) <= 1e-13 * 4.2
    f = normalize_zero_mean(ShellField(grid, np.random.default_rng(0).normal(size=grid.shape)))
    np.testing.assert_allclose(normalize_zero_mean(f).values, f.values, atol=1e-13)


def test_normalize_r_on_annulus():
    # exact mean of r over A(1, 2): (2 pi * 7/3) / (3 pi) = 14/9
    for n, tol in ((64, 1e-4), (256, 1e-5)):
        grid = ShellGrid.make(1, 2, 2, n, 8)
        f = ShellField.from_function(grid, lambda r, p: r + 0 * p)
        shift = (f.values - normalize_zero_mean(f).values)[0, 0]
        assert shift == pytest.approx(14 / 9, abs=tol)
        w = grid.cell_volumes()
        assert abs(np.sum(normalize_zero_mean(f).values * w)) / np.sum(w) <= 1e-13 * 2


def test_field_norms_of_constant():
    grid = ShellGrid.make(1, 2, 2, 16, 32)
    n = field_norms(ShellField(grid, np.ones(grid.shape)))
    assert n["L2"] == pytest.approx(np.sqrt(3 * np.pi))
    assert n["H1"] == pytest.approx(n["L2"])


@pytest.mark.parametrize("kind, a1, a2", [("annulus2d", 1, 2), ("annulus2d", 0, 0),
                                          ("ball3d_axisym", 0, 1), ("cylinder_rect", 0, 1)])
def test_stability_ratio_settles(kind, a1, a2):
    ratios = []
    for n in (32, 64, 128):
        p = RobinProblem(kind, source(kind, a1, a2, n=n, seed=3), a1, a2)
        ratios.append(stability_probe(p, 1.0))
    assert abs(ratios[2] / ratios[1] - 1) < 0.1 and abs(ratios[1] / ratios[0] - 1) < 0.1
    assert stability_probe(p, 1e-3) == pytest.approx(ratios[-1], rel=1e-10)


def test_stability_zero_perturbation():
    p = RobinProblem("disk2d", source("disk2d", 0, 1), 0.0, 1.0)
    assert stability_probe(p, 0.0) == 0.0
