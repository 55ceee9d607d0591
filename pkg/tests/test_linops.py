import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elliptic import assemble, build_grid, lambda1_exact, laplacian, smallest_eigenpair, solve
from elliptic.exceptions import NotCoercive


def test_closed_form_eigenvalue_n100():
    g = build_grid(1, 100)
    pair = smallest_eigenpair(assemble(g))
    h = g.h
    assert abs(pair.value - 4 / h**2 * math.sin(math.pi * h / 2) ** 2) <= 1e-10
    assert abs(pair.value - math.pi**2) <= 1e-2


def test_dense_eigensolve_n10():
    g = build_grid(1, 10)
    dense = np.linalg.eigvalsh(laplacian(g).toarray())[0]
    assert abs(smallest_eigenpair(assemble(g)).value - dense) <= 1e-12


def test_eigenvector_normalization_and_sign():
    g = build_grid(1, 50)
    v = smallest_eigenpair(assemble(g)).vector
    assert g.norm_l2(v) == pytest.approx(1.0)
    assert np.all(v > 0)


def test_second_order_convergence():
    errs = [abs(lambda1_exact(build_grid(1, n)) - math.pi**2) for n in (50, 100, 200)]
    # h = 1/(n+1), so use the actual spacing ratio
    hs = [1 / 51, 1 / 101, 1 / 201]
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    assert all(1.9 <= q <= 2.1 for q in orders)


def test_2d_eigenvalue_is_sum_of_axes():
    g = build_grid(2, (15, 20))
    pair = smallest_eigenpair(assemble(g))
    assert pair.value == pytest.approx(lambda1_exact(g), rel=1e-10)


def test_indefinite_shift_matches_dense():
    g = build_grid(1, 40)
    c = -20 * np.sin(np.pi * g.coords) ** 2
    A = assemble(g, c)
    dense = np.linalg.eigvalsh(laplacian(g).toarray() + np.diag(c))[0]
    assert smallest_eigenpair(A).value == pytest.approx(dense, abs=1e-8)


def test_solve_rejects_noncoercive():
    g = build_grid(1, 30)
    with pytest.raises(NotCoercive):
        solve(assemble(g, -lambda1_exact(g) - 1.0), g.ones())


def test_solve_zero_rhs():
    g = build_grid(1, 30)
    assert np.all(solve(assemble(g), g.zeros()) == 0)


def test_solve_2d_matches_direct():
    g = build_grid(2, 12)
    rhs = g.sample(lambda x, y: np.sin(3 * x) + y)
    u = solve(assemble(g, 2.0), rhs)
    import scipy.sparse as sp
    ref = sp.linalg.spsolve((laplacian(g) + 2.0 * sp.identity(g.size)).tocsc(), rhs)
    assert np.allclose(u, ref, atol=1e-8)


def test_shift_is_read_only():
    g = build_grid(1, 10)
    A = assemble(g, g.ones())
    with pytest.raises(ValueError):
        A.shift[0] = 5.0


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 40), seed=st.integers(0, 2**31), c=st.floats(0, 50))
def test_operator_is_symmetric(n, seed, c):
    g = build_grid(1, n)
    r = np.random.default_rng(seed)
    u, v = r.normal(size=n), r.normal(size=n)
    A = assemble(g, c)
    assert A.form(u, v) == pytest.approx(A.form(v, u), rel=1e-10, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 60), seed=st.integers(0, 2**31), c=st.floats(0, 100))
def test_discrete_maximum_principle(n, seed, c):
    g = build_grid(1, n)
    rhs = np.abs(np.random.default_rng(seed).normal(size=n))
    assert np.all(solve(assemble(g, c), rhs) >= -1e-14)


@settings(max_examples=15, deadline=None)
@given(c1=st.floats(0, 30), dc=st.floats(0.01, 30))
def test_eigenvalue_monotone_in_potential(c1, dc):
    g = build_grid(1, 30)
    lo = smallest_eigenpair(assemble(g, c1)).value
    hi = smallest_eigenpair(assemble(g, c1 + dc)).value
    assert hi > lo
    assert hi - lo == pytest.approx(dc, rel=1e-8)
