import json

import numpy as np
import pytest

from robinstar.cylinder import CylinderField, CylinderGrid
from robinstar.harness import (ComparisonReport, TensorBump, ToleranceModel, bump_bank,
                               check_commutativity, check_equal_slice_means,
                               check_flux_constancy, check_subharmonicity_weak,
                               check_v_symmetrized, fit_order, refinement_sweep, run_ball_comparison,
                               run_comparison, run_cylinder_comparison, run_shell_comparison)
from robinstar.manufactured import manufactured
from robinstar.solver import RobinProblem, solve
from robinstar.sources import Geometry, SourceSpec, build_grid, generate_source
from robinstar.sphere import ShellField, ShellGrid


def problem(kind, a1, a2, n=32, seed=0, skind="bandlimited", m=None):
    grid = build_grid(kind, Geometry.default(kind), n, 2 * n if m is None else m)
    f = generate_source(SourceSpec(skind, seed), grid, kind, a1, a2)
    return RobinProblem(kind, f, a1, a2)


# --------------------------------------------------------------------------
# tolerance model

def test_tolerance_model_scaling():
    tm = ToleranceModel()
    g = ShellGrid.make(1, 2, 2, 64, 128)
    expected = 10 * ((1 / 64) ** 2 + (2 * np.pi / 128) ** 2) * 3.0 * 1.0
    assert tm.tol(g, 3.0) == pytest.approx(expected)
    c = CylinderGrid(2.0, 1.0, 32, 16)
    assert tm.tol(c, 1.0, 1.0) == pytest.approx(((2 / 32) ** 2 + (1 / 16) ** 2) * 4.0)


# --------------------------------------------------------------------------
# identity checks

def test_equal_slice_means_trivial_and_guard():
    p = problem("disk2d", 0, 1)
    u = solve(p).solution
    assert check_equal_slice_means(u, u, "disk2d") == 0
    with pytest.raises(ValueError, match="hypothesis unmet"):
        check_equal_slice_means(u, u, "annulus2d", 1.0, 0.0)


def test_equal_slice_means_mean_free_difference():
    grid = ShellGrid.make(1, 2, 2, 8, 32)
    u = ShellField.from_function(grid, lambda r, p: r ** 2 + 0 * p)
    v = u.with_values(u.values + ShellField.from_function(grid, lambda r, p: r * np.cos(3 * p)).values)
    assert check_equal_slice_means(u, v, "annulus2d") < 1e-13


def test_flux_and_symmetrization_trivial():
    grid = ShellGrid.make(1, 2, 3, 8, 16)
    radial = ShellField.from_function(grid, lambda r, t: np.exp(r) + 0 * t)
    assert check_flux_constancy(radial, radial) == (0.0, 0.0)
    assert check_v_symmetrized(radial) == 0.0


def test_commutativity_constant_and_quadratic():
    grid = ShellGrid.make(1, 2, 2, 32, 64)
    const = ShellField(grid, np.full(grid.shape, 2.0))
    assert check_commutativity(const, const.with_values(np.zeros(grid.shape))) < 1e-10
    # Laplace(r^2 cos phi) = 3 cos phi
    errs = []
    for n in (32, 64, 128):
        grid = ShellGrid.make(1, 2, 2, n, 2 * n)
        u = ShellField.from_function(grid, lambda r, p: r ** 2 * np.cos(p))
        errs.append(check_commutativity(u, ShellField.from_function(grid, lambda r, p: 3 * np.cos(p) + 0 * r)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6)), ratios


def test_commutativity_radial():
    # u = r^3 in n = 3: Laplace u = 12 r
    errs = []
    for n in (32, 64, 128):
        grid = ShellGrid.make(1, 2, 3, n, 2 * n)
        u = ShellField.from_function(grid, lambda r, t: r ** 3 + 0 * t)
        errs.append(check_commutativity(u, ShellField.from_function(grid, lambda r, t: 12 * r + 0 * t)))
    assert errs[2] < errs[1] < errs[0]
    assert fit_order([1, 0.5, 0.25], errs) > 1.8


def test_bump_bank_shape():
    x = np.linspace(0, 1, 40)
    y = np.linspace(0, 2, 60)
    bank = bump_bank(x, y)
    assert len(bank) == 75
    for G in bank:
        assert not G.touches(x, y)
        assert np.all(G.values(x, y) >= 0)


def test_bump_laplacian_symbolic():
    G = TensorBump(0.5, 0.3, 0.5, 0.3)
    x = np.linspace(0, 1, 2001)
    h = x[1] - x[0]
    v = G.values(x, x)
    fd = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2] - 4 * v[1:-1, 1:-1]) / h ** 2
    np.testing.assert_allclose(fd, G.laplacian(x, x)[1:-1, 1:-1], atol=1e-3)


def test_subharmonicity_radial_equality():
    # symmetrization is a no-op for radial data; margins are O(h^2)
    ms = manufactured("annulus2d", 1.0, 2.0, mode=0)
    out = []
    for n in (32, 64):
        grid = ShellGrid.make(1, 2, 2, n, 2 * n)
        f = ShellField.from_function(grid, lambda r, p: ms.source(r, p) + 0 * p)
        u = solve(RobinProblem("annulus2d", f, 1.0, 2.0)).solution
        out.append(abs(check_subharmonicity_weak(u, f)))
    assert out[1] < out[0] / 3


@pytest.mark.parametrize("kind, a1, a2", [("annulus2d", 1, 2), ("shell3d_axisym", 0, 0),
                                          ("disk2d", 0, 1), ("cylinder_rect", 1, 0)])
def test_subharmonicity_random_within_tol(kind, a1, a2):
    p = problem(kind, a1, a2, n=48, seed=5)
    u = solve(p).solution
    tm = ToleranceModel()
    tol = tm.tol(p.grid, float(np.max(np.abs(p.source.values))), tm.c_sub)
    assert check_subharmonicity_weak(u, p.source) <= tol


def test_subharmonicity_cylinder_manufactured():
    ms = manufactured("cylinder_rect", 1.0, 1.0, b=1.0)
    grid = CylinderGrid(1.0, 1.0, 48, 48)
    f, _ = ms.fields(grid)
    u = solve(RobinProblem("cylinder_rect", f, 1.0, 1.0)).solution
    tm = ToleranceModel()
    assert check_subharmonicity_weak(u, f) <= tm.tol(grid, float(np.max(np.abs(f.values))), tm.c_sub)


def test_subharmonicity_skips_margin_bumps():
    grid = CylinderGrid(1.0, 1.0, 16, 16)
    f = CylinderField(grid, np.zeros(grid.shape))
    u = f
    bad = [TensorBump(0.05, 0.2, 0.5, 0.2)]
    with pytest.warns(UserWarning, match="margin"):
        assert check_subharmonicity_weak(u, f, bad) is None


# --------------------------------------------------------------------------
# scenario drivers

@pytest.mark.parametrize("kind, a1, a2", [("annulus2d", 1, 2), ("annulus2d", 0, 0),
                                          ("shell3d_axisym", 1, 0), ("disk2d", 0, 1),
                                          ("ball3d_axisym", 0, 0), ("cylinder_rect", 0, 1)])
def test_symmetric_data_is_equality_case(kind, a1, a2):
    rep = run_comparison(problem(kind, a1, a2, skind="symmetric"), structural=False)
    assert rep.equality_case and rep.verdict
    assert rep.max_violation <= 10 * rep.interior_residual


def test_annulus_random_robin_passes():
    rep = run_shell_comparison(problem("annulus2d", 1, 2, n=128, seed=11))
    assert rep.verdict, rep.failures
    assert rep.max_violation <= rep.tol
    assert rep.convex_means["require_increasing"]
    assert rep.mean_equality_defect is None and rep.lp is None


def test_annulus_neumann_non_monotone_convex():
    rep = run_shell_comparison(problem("annulus2d", 0, 0, n=64, seed=12))
    assert rep.verdict, rep.failures
    assert not rep.convex_means["require_increasing"]
    assert "reverse_hinge" in rep.convex_means["judged"]
    assert rep.convex_means["families"]["reverse_hinge"] <= rep.tolerances["convex_means"]
    assert rep.mean_equality_defect <= rep.tol


@pytest.mark.parametrize("kind, a2", [("disk2d", 1.0), ("disk2d", 0.0), ("ball3d_axisym", 1.0)])
def test_ball_comparison(kind, a2):
    rep = run_ball_comparison(problem(kind, 0, a2, n=64, seed=13))
    assert rep.verdict, rep.failures
    assert rep.mean_equality_defect <= rep.tol and rep.k1 <= rep.tol
    assert "square" in rep.convex_means["judged"]


@pytest.mark.parametrize("a1, a2", [(1.0, 0.0), (0.0, 0.0)])
def test_cylinder_comparison(a1, a2):
    rep = run_cylinder_comparison(problem("cylinder_rect", a1, a2, n=64, seed=14))
    assert rep.verdict, rep.failures
    assert rep.mean_equality_defect <= rep.tol
    assert rep.flux_constancy_defect is None


def test_decreasing_cylinder_data_equality():
    grid = CylinderGrid(1.0, 1.0, 32, 32)
    f = CylinderField.from_function(grid, lambda x, y: (1 + x) * np.cos(np.pi * y))
    rep = run_cylinder_comparison(RobinProblem("cylinder_rect", f, 1.0, 1.0))
    assert rep.equality_case and rep.verdict


def test_driver_kind_guards():
    with pytest.raises(ValueError, match="shell kind"):
        run_shell_comparison(problem("disk2d", 0, 1))
    with pytest.raises(ValueError, match="ball kind"):
        run_ball_comparison(problem("annulus2d", 0, 1))


def test_nonneg_source_enables_lp_on_robin_shell():
    rep = run_shell_comparison(problem("annulus2d", 1, 2, n=48, skind="nonneg_bandlimited"))
    assert rep.lp is not None and rep.lp["worst"] <= rep.tolerances["lp"]
    assert rep.verdict


def test_verdict_matches_failures():
    rep = run_comparison(problem("annulus2d", 1, 2, n=8), tol_model=ToleranceModel(0.01, 0.01, 0.01))
    assert not rep.verdict and rep.failures == ["commutativity"]
    rep = run_comparison(problem("annulus2d", 1, 2, n=32))
    assert rep.verdict and rep.failures == []


def test_report_json_round_trip():
    rep = run_comparison(problem("shell3d_axisym", 0, 0, n=16))
    text = json.dumps(rep.to_dict(), sort_keys=True, allow_nan=False)
    back = ComparisonReport.from_dict(json.loads(text))
    assert back == rep
    with pytest.raises(ValueError, match="unknown report fields"):
        ComparisonReport.from_dict({**rep.to_dict(), "extra": 1})


def test_refinement_sweep_rounding_limited():
    out = refinement_sweep("annulus2d", 1.0, 2.0, seeds=[0, 1], levels=(16, 32, 64))
    assert out["passed"] and out["rounding_limited"] and out["order"] is None
    assert all(r["max_violation"] <= r["rounding_floor"] for r in out["levels"])


def test_fit_order_recovers_slope():
    h = np.array([0.1, 0.05, 0.025])
    assert fit_order(h, 3 * h ** 2) == pytest.approx(2.0)
