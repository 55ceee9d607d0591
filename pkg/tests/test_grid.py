import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elliptic.grid import Grid, build_grid, integrate, norm_h1, norm_inf, read_field_csv, write_field_csv

counts = st.integers(min_value=3, max_value=60)


def test_spacing_and_coords_1d():
    g = build_grid(1, 9)
    assert g.h == pytest.approx(0.1)
    assert g.coords.shape == (9,)
    assert g.coords[0] == pytest.approx(0.1) and g.coords[-1] == pytest.approx(0.9)


def test_coords_2d_ij_ordering():
    g = build_grid(2, (3, 4), ((0, 1), (0, 2)))
    assert g.shape == (3, 4) and g.size == 12
    X = g.coords.reshape(3, 4, 2)
    assert np.allclose(X[:, 0, 0], g.axis(0))
    assert np.allclose(X[0, :, 1], g.axis(1))
    assert g.cell == pytest.approx(0.25 * 0.4)


@pytest.mark.parametrize("kwargs", [dict(dim=3), dict(counts=2), dict(extents=((1, 1),))])
def test_invalid_grids(kwargs):
    with pytest.raises(ValueError):
        build_grid(**kwargs)


def test_check_rejects_shape_and_nan():
    g = build_grid(1, 5)
    with pytest.raises(ValueError):
        g.check(np.zeros(4))
    with pytest.raises(ValueError):
        g.check(np.array([0, 1, np.nan, 0, 0.0]))


def test_grid_is_immutable():
    g = build_grid(1, 5)
    with pytest.raises(Exception):
        g.dim = 2


def test_integrate_constant_is_interior_area():
    g = build_grid(1, 99)
    assert integrate(g, g.ones()) == pytest.approx(0.99)


@settings(max_examples=40, deadline=None)
@given(n=counts, a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**31))
def test_integrate_is_linear(n, a, b, seed):
    g = build_grid(1, n)
    r = np.random.default_rng(seed)
    u, v = r.normal(size=n), r.normal(size=n)
    assert integrate(g, a * u + b * v) == pytest.approx(a * integrate(g, u) + b * integrate(g, v), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(n=counts, seed=st.integers(0, 2**31))
def test_norms_are_nonnegative_and_homogeneous(n, seed):
    g = build_grid(1, n)
    u = np.random.default_rng(seed).normal(size=n)
    assert norm_h1(g, u) > 0 and norm_inf(u) > 0
    assert norm_h1(g, -3 * u) == pytest.approx(3 * norm_h1(g, u))


def test_csv_roundtrip_is_exact(tmp_path, rng):
    g = build_grid(2, (4, 5))
    u = rng.normal(size=g.size)
    path = tmp_path / "u.csv"
    write_field_csv(path, g, u)
    X, v = read_field_csv(path)
    assert np.array_equal(v, u)
    assert np.array_equal(X, g.coords)
    assert path.read_text().splitlines()[0] == "x,y,u"
