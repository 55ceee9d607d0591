"""Nonlinearity catalog, problem container and independent 1-D oracles.

The oracles (closed-form Bratu branch, shooting) share no code with the
grid solvers; tests use them as ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import ParamOutOfRange, UnknownName
from .grid import Grid


@dataclass(frozen=True)
class Nonlinearity:
    """f(x, u) with derivative and antiderivative F(x, u) = int_0^u f.

    ``ar`` is a pair (mu, r) with t f'(t) >= mu f(t) for t >= r.
    """

    name: str
    f: Callable
    fprime: Callable
    F: Callable
    params: dict = field(default_factory=dict)
    convex: bool = False
    positive: bool = False
    f0: float = 0.0
    fprime0: float = 0.0
    slope_a: Optional[float] = None
    offset_l: Optional[float] = None
    ar: Optional[tuple] = None
    autonomous: bool = True

    def meta(self) -> dict:
        return {
            "convex": self.convex,
            "positive": self.positive,
            "f0": self.f0,
            "fprime0": self.fprime0,
            "slope_a": self.slope_a,
            "offset_l": self.offset_l,
            "ar": list(self.ar) if self.ar is not None else None,
        }


def _gelfand(mu=2.0):
    if mu <= 1:
        raise ParamOutOfRange("gelfand: mu must exceed 1")
    return Nonlinearity(
        "gelfand",
        lambda x, u: np.exp(u),
        lambda x, u: np.exp(u),
        lambda x, u: np.expm1(u),
        {"mu": mu},
        convex=True, positive=True, f0=1.0, fprime0=1.0,
        ar=(mu, mu),
    )


def _affine(a=1.0, b=1.0):
    if a <= 0:
        raise ParamOutOfRange("affine: a must be positive")
    if b < 0:
        raise ParamOutOfRange("affine: b must be nonnegative")
    return Nonlinearity(
        "affine",
        lambda x, u: a * u + b,
        lambda x, u: a + 0.0 * u,
        lambda x, u: 0.5 * a * u**2 + b * u,
        {"a": a, "b": b},
        convex=True, positive=b > 0, f0=b, fprime0=a,
        slope_a=a, offset_l=b,
    )


def _constant(c=1.0):
    return Nonlinearity(
        "constant",
        lambda x, u: c + 0.0 * u,
        lambda x, u: 0.0 * u,
        lambda x, u: c * u,
        {"c": c},
        convex=True, positive=c > 0, f0=c, fprime0=0.0,
        slope_a=0.0, offset_l=c,
    )


def _power(p=3.0):
    if p <= 1:
        raise ParamOutOfRange("power: p must exceed 1")

    def pos(u):
        return np.maximum(u, 0.0)

    return Nonlinearity(
        "power",
        lambda x, u: pos(u) ** p,
        lambda x, u: p * pos(u) ** (p - 1),
        lambda x, u: pos(u) ** (p + 1) / (p + 1),
        {"p": p},
        convex=True, positive=False, f0=0.0, fprime0=0.0,
        ar=(p, 0.0),
    )


def _logistic(k=1.0, p=3.0):
    # odd extension k u - |u|^(p-1) u of k u - u^p
    if p <= 1:
        raise ParamOutOfRange("logistic: p must exceed 1")
    return Nonlinearity(
        "logistic",
        lambda x, u: k * u - np.abs(u) ** (p - 1) * u,
        lambda x, u: k - p * np.abs(u) ** (p - 1),
        lambda x, u: 0.5 * k * u**2 - np.abs(u) ** (p + 1) / (p + 1),
        {"k": k, "p": p},
        convex=False, positive=False, f0=0.0, fprime0=k,
    )


def _asym_neg(a=2.0, l=-0.5):
    if a <= 1:
        raise ParamOutOfRange("asym_neg: a must exceed 1")
    if not -1 < l < 0:
        raise ParamOutOfRange("asym_neg: l must lie in (-1, 0)")
    return Nonlinearity(
        "asym_neg",
        lambda x, u: a * u + l + np.exp(-u),
        lambda x, u: a - np.exp(-u),
        lambda x, u: 0.5 * a * u**2 + l * u - np.expm1(-u),
        {"a": a, "l": l},
        convex=True, positive=True, f0=l + 1.0, fprime0=a - 1.0,
        slope_a=a, offset_l=l,
    )


CATALOG = {
    "gelfand": (_gelfand, "f = exp(u)", {"mu": "AR exponent > 1 (default 2)"}),
    "affine": (_affine, "f = a u + b", {"a": "> 0 (default 1)", "b": ">= 0 (default 1)"}),
    "constant": (_constant, "f = c", {"c": "real (default 1)"}),
    "power": (_power, "f = (u+)^p", {"p": "> 1 (default 3)"}),
    "logistic": (_logistic, "f = k u - |u|^(p-1) u", {"k": "real (default 1)", "p": "> 1 (default 3)"}),
    "asym_neg": (_asym_neg, "f = a u + l + exp(-u)", {"a": "> 1 (default 2)", "l": "in (-1, 0) (default -0.5)"}),
}


def catalog(name: str, **params) -> Nonlinearity:
    try:
        factory = CATALOG[name][0]
    except KeyError:
        raise UnknownName(f"unknown nonlinearity {name!r}; known: {', '.join(CATALOG)}") from None
    try:
        return factory(**{k: float(v) for k, v in params.items()})
    except TypeError as err:
        raise ParamOutOfRange(f"{name}: {err}") from None


def catalog_listing() -> list[dict]:
    out = []
    for name, (factory, formula, schema) in CATALOG.items():
        out.append({"name": name, "formula": formula, "params": schema, "meta": factory().meta()})
    return out


@dataclass(frozen=True)
class Problem:
    """-Lap u = lam * f(x, u) + g on a grid with zero Dirichlet data.

    ``lam`` is the default coupling; operations that take an explicit
    lambda override it.  Fixed-coupling problems simply keep lam = 1.
    """

    grid: Grid
    nonlinearity: Nonlinearity
    lam: float = 1.0
    forcing: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.forcing is not None:
            object.__setattr__(self, "forcing", self.grid.check(self.forcing, "forcing"))

    def with_lambda(self, lam) -> "Problem":
        return replace(self, lam=float(lam))

    def _lam(self, lam):
        return self.lam if lam is None else lam

    def rhs(self, u, lam=None) -> np.ndarray:
        out = self._lam(lam) * self.nonlinearity.f(self.grid.coords, u)
        if self.forcing is not None:
            out = out + self.forcing
        return out

    def rhs_prime(self, u, lam=None) -> np.ndarray:
        return self._lam(lam) * self.nonlinearity.fprime(self.grid.coords, u)

    def potential(self, u, lam=None) -> np.ndarray:
        out = self._lam(lam) * self.nonlinearity.F(self.grid.coords, u)
        if self.forcing is not None:
            out = out + self.forcing * u
        return out

    def residual(self, u, lam=None) -> np.ndarray:
        from .linops import laplacian

        return laplacian(self.grid) @ u - self.rhs(u, lam)


def make_problem(name, grid, lam=1.0, **params) -> Problem:
    return Problem(grid, catalog(name, **params), lam)


# --- Bratu closed form --------------------------------------------------


def bratu_lambda(theta):
    return theta**2 / (2.0 * np.cosh(theta / 4.0) ** 2)


def bratu_supnorm(theta):
    return 2.0 * np.log(np.cosh(theta / 4.0))


def bratu_profile(theta, x):
    return -2.0 * np.log(np.cosh(theta * (x - 0.5) / 2.0) / np.cosh(theta / 4.0))


def _dlog_lambda(theta):
    # d/dtheta log(lambda(theta)) = 2/theta - tanh(theta/4)/2
    return 2.0 / theta - 0.5 * np.tanh(theta / 4.0)


@dataclass(frozen=True)
class BratuOracle:
    lambda_star: float
    theta_star: float
    u_star_mid: float

    @staticmethod
    def branch_map(theta):
        return bratu_lambda(theta), bratu_supnorm(theta)

    def roots(self, lam, theta_max=40.0) -> list[float]:
        """Parameters theta with lambda(theta) = lam (0, 1 or 2 of them)."""
        if lam <= 0:
            return []
        if lam > self.lambda_star:
            return []
        g = lambda t: bratu_lambda(t) - lam
        out = [brentq(g, 1e-14, self.theta_star, xtol=1e-14, rtol=1e-15)]
        if lam < self.lambda_star and g(theta_max) < 0:
            out.append(brentq(g, self.theta_star, theta_max, xtol=1e-14, rtol=1e-15))
        return out

    def supnorms(self, lam) -> list[float]:
        return [bratu_supnorm(t) for t in self.roots(lam)]

    def profile(self, lam, x, which=0):
        return bratu_profile(self.roots(lam)[which], x)


def bratu_oracle() -> BratuOracle:
    """Fold of -u'' = lam exp(u) on (0, 1) from the closed-form branch."""
    # the derivative of log lambda changes sign once on (0, inf)
    theta_star = brentq(_dlog_lambda, 1.0, 10.0, xtol=1e-15, rtol=1e-15)
    return BratuOracle(bratu_lambda(theta_star), theta_star, bratu_supnorm(theta_star))


# --- shooting ------------------------------------------------------------


@dataclass(frozen=True)
class ShootingSolution:
    slope: float
    supnorm: float
    residual: float
    positive: bool


def _shoot(fun, lam, s, steps):
    """RK4 for u'' = -lam f(u), u(0)=0, u'(0)=s; vectorized over s.

    Returns u(1), max |u| and min interior u for each slope.
    """
    h = 1.0 / steps
    u = np.zeros_like(s)
    v = np.array(s, dtype=float)
    umax = np.zeros_like(s)
    umin = np.full_like(s, np.inf)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            k1u, k1v = v, -lam * fun(u)
            k2u, k2v = v + 0.5 * h * k1v, -lam * fun(u + 0.5 * h * k1u)
            k3u, k3v = v + 0.5 * h * k2v, -lam * fun(u + 0.5 * h * k2u)
            k4u, k4v = v + h * k3v, -lam * fun(u + h * k3u)
            u = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
            v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            np.maximum(umax, np.abs(u), out=umax)
            if k < steps - 1:
                np.minimum(umin, u, out=umin)
    return u, umax, umin


def shooting_oracle(nonlinearity: Nonlinearity, lam, s_range=(-100.0, 100.0),
                    n_scan=401, steps=10000, xtol=1e-12) -> list[ShootingSolution]:
    """All isolated solutions of -u'' = lam f(u) on (0, 1), u(0) = u(1) = 0.

    Scans the initial slope over ``s_range``, then bisects each sign change
    of u(1; s) (all brackets at once) down to ``xtol``.
    """
    fun = lambda u: nonlinearity.f(None, u)
    s = np.linspace(s_range[0], s_range[1], n_scan)
    end, _, _ = _shoot(fun, lam, s, steps)
    ok = np.isfinite(end)
    lo, hi, exact = [], [], []
    for i in range(n_scan - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        if end[i] == 0.0:
            exact.append(s[i])
        elif end[i] * end[i + 1] < 0:
            lo.append(s[i])
            hi.append(s[i + 1])
    if ok[-1] and end[-1] == 0.0:
        exact.append(s[-1])
    lo, hi = np.array(lo), np.array(hi)
    if lo.size:
        # vectorized Illinois false position
        flo, _, _ = _shoot(fun, lam, lo, steps)
        fhi, _, _ = _shoot(fun, lam, hi, steps)
        side = np.zeros(lo.size)
        for _ in range(200):
            if np.max(hi - lo) <= xtol:
                break
            mid = (lo * fhi - hi * flo) / (fhi - flo)
            mid = np.where((mid > lo) & (mid < hi), mid, 0.5 * (lo + hi))
            fm, _, _ = _shoot(fun, lam, mid, steps)
            left = np.sign(fm) == np.sign(flo)
            hit = fm == 0
            # root lies in [mid, hi] when fm has the sign of flo
            lo_new = np.where(left, mid, lo)
            hi_new = np.where(left, hi, mid)
            flo_new = np.where(left, fm, np.where(side == -1, 0.5 * flo, flo))
            fhi_new = np.where(left, np.where(side == 1, 0.5 * fhi, fhi), fm)
            side = np.where(left, 1, -1)
            lo = np.where(hit, mid, lo_new)
            hi = np.where(hit, mid, hi_new)
            flo, fhi = flo_new, fhi_new
            shrink = hi - lo <= xtol
            if np.all(shrink | hit):
                break
    roots = np.concatenate([0.5 * (lo + hi), np.array(exact)])
    roots.sort()
    if not roots.size:
        return []
    end, umax, umin = _shoot(fun, lam, roots, steps)
    return [
        ShootingSolution(float(r), float(m), float(abs(e)), bool(mn > 0))
        for r, e, m, mn in zip(roots, end, umax, umin)
    ]
