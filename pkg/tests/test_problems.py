import math

import numpy as np
import pytest

from elliptic import build_grid, catalog, make_problem
from elliptic.exceptions import ParamOutOfRange, UnknownName
from elliptic.problems import CATALOG, bratu_lambda, bratu_oracle, catalog_listing, shooting_oracle

NAMES = sorted(CATALOG)


@pytest.fixture(scope="module")
def oracle():
    return bratu_oracle()


def test_gelfand_entry():
    nl = catalog("gelfand")
    assert nl.f(None, 1.0) == pytest.approx(math.e)
    assert nl.fprime(None, 0.0) == 1.0
    assert nl.convex and nl.positive and nl.f0 == 1.0


def test_affine_entry():
    nl = catalog("affine", a=2, b=3)
    assert nl.slope_a == 2 and nl.offset_l == 3


def test_asym_neg_entry():
    nl = catalog("asym_neg", a=2, l=-0.5)
    assert nl.f(None, 0.0) == pytest.approx(0.5)
    assert nl.fprime0 == pytest.approx(1.0)
    assert nl.offset_l == -0.5


def test_asym_neg_offset_is_limit():
    nl = catalog("asym_neg", a=2, l=-0.5)
    t = 40.0
    assert nl.f(None, t) - 2 * t == pytest.approx(-0.5, abs=1e-12)


def test_unknown_name():
    with pytest.raises(UnknownName):
        catalog("sinh")
    with pytest.raises(KeyError):
        catalog("sinh")


@pytest.mark.parametrize("name,params", [
    ("power", {"p": 1}), ("affine", {"a": 0}), ("affine", {"b": -1}),
    ("asym_neg", {"a": 1}), ("asym_neg", {"l": 0}), ("asym_neg", {"l": -1}),
    ("gelfand", {"zeta": 1}),
])
def test_param_out_of_range(name, params):
    with pytest.raises(ParamOutOfRange):
        catalog(name, **params)


@pytest.mark.parametrize("name", NAMES)
def test_antiderivative_and_derivative_consistency(name, rng):
    nl = catalog(name)
    u = rng.uniform(-3, 3, size=50)
    assert np.all(nl.F(None, np.zeros(3)) == 0)
    h = 1e-5
    dF = (nl.F(None, u + h) - nl.F(None, u - h)) / (2 * h)
    df = (nl.f(None, u + h) - nl.f(None, u - h)) / (2 * h)
    assert np.allclose(dF, nl.f(None, u), rtol=1e-6, atol=1e-6)
    assert np.allclose(df, nl.fprime(None, u), rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", NAMES)
def test_meta_matches_evaluation(name):
    nl = catalog(name)
    assert nl.f(None, 0.0) == pytest.approx(nl.f0)
    assert nl.fprime(None, 0.0) == pytest.approx(nl.fprime0)


def test_listing_covers_catalog():
    listing = catalog_listing()
    assert [e["name"] for e in listing] == list(CATALOG)
    assert all({"formula", "params", "meta"} <= set(e) for e in listing)


def test_problem_residual_of_exact_linear_solution():
    g = build_grid(1, 50)
    p = make_problem("constant", g, lam=2.0, c=1.0)
    u = g.sample(lambda x: x * (1 - x))  # -u'' = 2 exactly for the 3-point stencil
    assert np.max(np.abs(p.residual(u))) < 1e-10


def test_problem_rejects_wrong_forcing_shape():
    g = build_grid(1, 10)
    from elliptic import Problem
    with pytest.raises(ValueError):
        Problem(g, catalog("gelfand"), forcing=np.zeros(3))


# --- oracles ---------------------------------------------------------------


def test_bratu_fold_value(oracle):
    assert oracle.lambda_star == pytest.approx(3.513830719, abs=1e-9)
    h = 1e-6
    t = oracle.theta_star
    assert abs((bratu_lambda(t + h) - bratu_lambda(t - h)) / (2 * h)) <= 1e-9


def test_bratu_trivial_end():
    lam, sup = bratu_oracle().branch_map(1e-8)
    assert lam < 1e-15 and sup < 1e-15


def test_bratu_root_counts(oracle):
    thetas = np.linspace(1e-3, 20, 20001)
    lam = bratu_lambda(thetas) - 1.0
    assert np.count_nonzero(np.diff(np.sign(lam))) == 2
    assert len(oracle.roots(1.0)) == 2
    assert oracle.roots(3.6) == []


def test_bratu_profile_satisfies_ode(oracle):
    x = np.linspace(0.01, 0.99, 9)
    h = 1e-4
    lam = 2.0
    u = lambda s: oracle.profile(lam, s)
    upp = (u(x + h) - 2 * u(x) + u(x - h)) / h**2
    assert np.allclose(-upp, lam * np.exp(u(x)), rtol=1e-5)
    assert abs(oracle.profile(lam, 0.0)) < 1e-13


@pytest.mark.slow
@pytest.mark.parametrize("lam,count", [(1.0, 2), (2.0, 2), (3.0, 2), (3.6, 0)])
def test_shooting_agrees_with_bratu(oracle, lam, count):
    sols = [s for s in shooting_oracle(catalog("gelfand"), lam, s_range=(0.0, 100.0)) if s.positive]
    assert len(sols) == count == len(oracle.roots(lam))
    for s, ref in zip(sols, oracle.supnorms(lam)):
        assert s.supnorm == pytest.approx(ref, abs=1e-7)


def test_shooting_affine_matches_closed_form():
    lam = 4.0
    k = math.sqrt(lam)
    ref = 1 / math.cos(k / 2) - 1
    sols = shooting_oracle(catalog("affine"), lam, s_range=(0.0, 10.0), n_scan=41)
    assert len(sols) == 1
    assert sols[0].supnorm == pytest.approx(ref, abs=1e-8)


def test_shooting_cubic_zero_only():
    nl = catalog("logistic", k=math.pi**2)
    sols = shooting_oracle(nl, 1.0, s_range=(-20.0, 20.0), n_scan=81)
    assert len(sols) == 1 and sols[0].supnorm < 1e-8


def test_shooting_power_single_positive():
    sols = [s for s in shooting_oracle(catalog("power"), 1.0, s_range=(1e-3, 100.0)) if s.positive]
    assert len(sols) == 1
    assert sols[0].supnorm == pytest.approx(3.7081, abs=1e-3)
