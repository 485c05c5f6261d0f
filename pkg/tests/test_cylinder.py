import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinstar.cylinder import CylinderField, CylinderGrid, j_y, laplacian_fd, star_y, y_rearrange
from robinstar.harness import check_commutativity
from robinstar.measure import star_function


def cfield(values, L=1.0, ell=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    ell = float(values.shape[1]) if ell is None else ell
    return CylinderField(CylinderGrid(L, ell, *values.shape), values)


def test_grid_validation():
    with pytest.raises(ValueError, match="L > 0"):
        CylinderGrid(0.0, 1.0, 4, 4)
    with pytest.raises(ValueError, match="two nodes"):
        CylinderGrid(1.0, 1.0, 1, 4)


def test_rearrange_examples():
    dec = cfield([[3, 2, 2, 1], [0, -1, -2, -3]])
    np.testing.assert_array_equal(y_rearrange(dec).values, dec.values)
    np.testing.assert_array_equal(y_rearrange(cfield([[1, 3, 2], [1, 3, 2]])).values,
                                  [[3, 2, 1], [3, 2, 1]])


def test_rearrange_sine_profile():
    grid = CylinderGrid(1.0, 2.0, 4, 40)
    f = CylinderField.from_function(grid, lambda x, y: np.sin(np.pi * y / 2.0) + 0 * x)
    fs = y_rearrange(f)
    assert np.all(np.diff(fs.values, axis=1) <= 0)
    np.testing.assert_array_equal(np.sort(fs.values, axis=1), np.sort(f.values, axis=1))


def test_j_examples():
    grid = CylinderGrid(1.0, 2.0, 3, 16)
    one = CylinderField(grid, np.ones(grid.shape))
    np.testing.assert_allclose(j_y(one).values, np.broadcast_to(grid.y_edges[1:], grid.shape))
    assert not np.any(j_y(one.with_values(np.zeros(grid.shape))).values)


def test_j_of_cos_is_sine_to_second_order():
    ell = 2.0
    errs = []
    for my in (32, 64, 128):
        grid = CylinderGrid(1.0, ell, 2, my)
        u = CylinderField.from_function(grid, lambda x, y: np.cos(np.pi * y / ell) + 0 * x)
        exact = ell / np.pi * np.sin(np.pi * grid.y_edges[1:] / ell)
        errs.append(np.max(np.abs(j_y(u).values - exact)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.9) & (ratios < 4.1))


def test_j_at_top_is_column_integral():
    rng = np.random.default_rng(0)
    u = cfield(rng.normal(size=(5, 9)), ell=1.3)
    np.testing.assert_allclose(j_y(u).values[:, -1], u.slice_integrals(), atol=1e-14)


def test_star_examples():
    dec = cfield([[3, 2, 1], [0, 0, -1]])
    np.testing.assert_array_equal(star_y(dec).values, j_y(dec).values)
    np.testing.assert_array_equal(star_y(cfield([[1, 3, 2], [1, 3, 2]])).values,
                                  [[3, 5, 6], [3, 5, 6]])


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_column_properties(seed):
    rng = np.random.default_rng(seed)
    u = cfield(rng.normal(size=(4, 11)), ell=2.0)
    g = cfield(rng.normal(size=(4, 11)), ell=2.0)
    us = y_rearrange(u)
    np.testing.assert_array_equal(y_rearrange(us).values, us.values)
    np.testing.assert_array_equal(np.sort(us.values, axis=1), np.sort(u.values, axis=1))
    st_ = star_y(u)
    assert np.all(np.diff(np.diff(np.c_[np.zeros(4), st_.values], axis=1), axis=1) <= 1e-12)
    assert np.all(st_.values >= j_y(u).values - 1e-12)
    l1 = np.abs(us.values - y_rearrange(g).values).sum(axis=1)
    assert np.all(l1 <= np.abs(u.values - g.values).sum(axis=1) + 1e-12)
    for i in range(4):
        F = star_function(u.column(i))
        np.testing.assert_allclose(st_.values[i], F(u.grid.y_edges[1:]), atol=1e-12)


def test_edge_field_guard():
    u = cfield([[1, 2, 3], [1, 2, 3]])
    with pytest.raises(ValueError, match="cell-centred"):
        j_y(j_y(u))


def test_laplacian_of_quadratic():
    grid = CylinderGrid(1.0, 1.0, 16, 16)
    u = CylinderField.from_function(grid, lambda x, y: x ** 2 + 0 * y)
    lap = laplacian_fd(u)
    assert np.all(np.isnan(lap[0])) and np.all(np.isnan(lap[-1]))
    np.testing.assert_allclose(lap[1:-1], 2.0, rtol=1e-9)


def test_commutativity_second_order():
    # u_y = 0 at y = 0 and y = ell, as even reflection assumes
    def u_fn(x, y):
        return np.sin(2 * x) * np.cos(np.pi * y) + x ** 3

    def lap_fn(x, y):
        return -(4 + np.pi ** 2) * np.sin(2 * x) * np.cos(np.pi * y) + 6 * x

    errs = []
    for n in (32, 64, 128):
        grid = CylinderGrid(1.0, 1.0, n, n)
        errs.append(check_commutativity(CylinderField.from_function(grid, u_fn),
                                        CylinderField.from_function(grid, lap_fn)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.4) & (ratios < 4.6))
