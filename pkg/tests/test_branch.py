import math

import numpy as np
import pytest

from elliptic import (
    ContinuationConfig, Problem, build_grid, catalog, estimate_lambda_star, lambda1_exact,
    newton_solve, pseudo_arclength_continue, solve_on_branch, stability_classify,
    trace_minimal_branch,
)
from elliptic.branch import _jacobian
from elliptic.exceptions import NoFold
from elliptic.problems import bratu_oracle


@pytest.fixture(scope="module")
def gelfand_diagram():
    g = build_grid(1, 99)
    p = Problem(g, catalog("gelfand"))
    d = trace_minimal_branch(p)
    lam_star = estimate_lambda_star(d, p)
    pseudo_arclength_continue(p, d, ContinuationConfig(lambda_min=1.0))
    return p, d, lam_star


def test_newton_recovers_linear_solution(grid99):
    p = Problem(grid99, catalog("affine", a=1, b=1))
    lam = 4.0
    u, iters = newton_solve(p, lam)
    k = math.sqrt(lam)
    x = grid99.coords
    exact_ode = np.cos(k * (x - 0.5)) / math.cos(k / 2) - 1
    assert np.max(np.abs(u - exact_ode)) < 1e-3  # discretization error only
    assert np.max(np.abs(p.residual(u, lam))) < 1e-9


def test_minimal_branch_increasing_and_stable(gelfand_diagram):
    _, d, _ = gelfand_diagram
    pts = d.minimal_prefix()
    for a, b in zip(pts, pts[1:]):
        assert b.lam > a.lam
        assert np.all(b.u >= a.u - 1e-12)
    assert all(p.lambda1_lin > 0 for p in pts[:-1])


def test_fold_is_semistable_point(gelfand_diagram):
    p, d, lam_star = gelfand_diagram
    assert abs(d.fold["lambda1_lin"]) <= 1e-6 * lambda1_exact(p.grid)
    assert lam_star == pytest.approx(bratu_oracle().lambda_star, abs=5e-3)


def test_fold_below_linear_bound(gelfand_diagram):
    p, _, lam_star = gelfand_diagram
    assert lam_star <= lambda1_exact(p.grid) + 1e-8


def test_upper_branch_unstable(gelfand_diagram):
    _, d, lam_star = gelfand_diagram
    upper = d.unstable_suffix()
    assert upper
    assert all(pt.lambda1_lin < 0 for pt in upper)
    assert all(pt.lam <= lam_star + 1e-9 for pt in d.points)


def test_upper_branch_matches_oracle(gelfand_diagram):
    p, d, _ = gelfand_diagram
    u = solve_on_branch(p, d, 2.0, "upper")
    assert np.max(u) == pytest.approx(bratu_oracle().supnorms(2.0)[1], rel=2e-3)


def test_branch_derivative_equation(grid99):
    # d u / d lambda solves (-Lap - lam f'(u)) w = f(u)
    p = Problem(grid99, catalog("gelfand"))
    lam, h = 2.0, 1e-5
    u, _ = newton_solve(p, lam)
    up, _ = newton_solve(p, lam + h, u)
    um, _ = newton_solve(p, lam - h, u)
    fd = (up - um) / (2 * h)
    import scipy.sparse.linalg as spla
    w = spla.spsolve(_jacobian(p, u, lam).tocsc(), np.exp(u))
    assert np.allclose(fd, w, rtol=1e-6, atol=1e-8)


def test_affine_terminates_in_asymptote():
    g = build_grid(1, 99)
    p = Problem(g, catalog("affine"))
    d = trace_minimal_branch(p)
    assert d.termination == "asymptote"
    assert d.lambdas[-1] < lambda1_exact(g)
    with pytest.raises(NoFold):
        estimate_lambda_star(d, p)


def test_lambda_max_stops_trace(grid99):
    d = trace_minimal_branch(Problem(grid99, catalog("gelfand")), ContinuationConfig(lambda_max=1.0))
    assert d.termination == "lambda_max"
    assert d.lambdas[-1] == pytest.approx(1.0)


def test_asym_neg_fold_window():
    g = build_grid(1, 99)
    p = Problem(g, catalog("asym_neg"))
    lam_star = estimate_lambda_star(p)
    lam1 = lambda1_exact(g)
    t = np.linspace(1e-3, 50, 200001)
    lam0 = np.min(p.nonlinearity.f(None, t) / t)
    assert lam1 / 2 < lam_star < lam1 / lam0


def test_asym_neg_upper_branch_grows_toward_asymptote():
    g = build_grid(1, 99)
    p = Problem(g, catalog("asym_neg"))
    d = trace_minimal_branch(p)
    estimate_lambda_star(d, p)
    pseudo_arclength_continue(p, d, ContinuationConfig(norm_cap=1e3))
    upper = d.unstable_suffix()
    lams = np.array([q.lam for q in upper])
    sups = np.array([q.sup_norm for q in upper])
    assert np.all(np.diff(lams) < 0) and np.all(np.diff(sups) > 0)
    assert lams[-1] > lambda1_exact(g) / 2


def test_diagram_rows(gelfand_diagram):
    _, d, _ = gelfand_diagram
    rows = list(d.rows())
    assert len(rows) == len(d.points)
    assert set(rows[0]) == {"lambda", "sup_norm", "l2_norm", "lambda1_lin", "tag", "arclength"}
    arc = [r["arclength"] for r in rows]
    assert np.all(np.diff(arc) > 0)


def test_solve_on_branch_outside_range(gelfand_diagram):
    p, d, _ = gelfand_diagram
    with pytest.raises(ValueError):
        solve_on_branch(p, d, 10.0, "minimal")


def test_2d_gelfand_fold_below_bound():
    g = build_grid(2, 15)
    p = Problem(g, catalog("gelfand"))
    lam_star = estimate_lambda_star(p)
    assert 0 < lam_star <= lambda1_exact(g) + 1e-8
    # known continuum value on the unit square is about 6.81
    assert lam_star == pytest.approx(6.81, rel=0.02)


def test_asym_neg_upper_branch_in_scaled_window():
    # offsets scaled to the window (lambda1/2, lambda*) instead of multiples of lambda1
    g = build_grid(1, 200)
    p = Problem(g, catalog("asym_neg"))
    d = trace_minimal_branch(p)
    lam_star = estimate_lambda_star(d, p)
    pseudo_arclength_continue(p, d, ContinuationConfig(norm_cap=1e4))
    half = lambda1_exact(g) / 2
    sups = [np.max(solve_on_branch(p, d, half + frac * (lam_star - half), "upper"))
            for frac in (0.2, 0.1, 0.05)]
    assert sups[0] < sups[1] < sups[2]
