"""Discrete energy, mountain-pass saddles, second solutions, Ekeland points.

Energy E(u) = 1/2 <u, -Lap_h u> - sum_i cell * (lam F(x_i, u_i) + g_i u_i);
its gradient in the grid inner product is the residual -Lap_h u - lam f(u) - g,
and the preconditioned gradient solves -Lap_h w = residual.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .barriers import default_barriers, monotone_iterate, stability_classify
from .branch import (
    NEWTON_TOL,
    ContinuationConfig,
    newton_solve,
    residual_scale,
    trace_minimal_branch,
)
from .exceptions import (
    EllipticError,
    MaxIterExceeded,
    NoMountainGeometry,
    OrderingFailed,
    PathCollapsed,
)
from .grid import norm_inf
from .linops import assemble, laplacian, smallest_eigenpair, solve
from .problems import Nonlinearity, Problem

log = logging.getLogger(__name__)


def energy(problem: Problem, lam, u) -> float:
    grid = problem.grid
    u = grid.check(u)
    return 0.5 * grid.inner(u, laplacian(grid) @ u) - grid.integrate(problem.potential(u, lam))


def grad(problem: Problem, lam, u, preconditioned=False) -> np.ndarray:
    r = problem.residual(problem.grid.check(u), lam)
    if preconditioned:
        return solve(assemble(problem.grid), r)
    return r


def energy_inner(grid, a, b) -> float:
    return grid.inner(a, laplacian(grid) @ b)


def energy_norm(grid, a) -> float:
    return math.sqrt(max(energy_inner(grid, a, a), 0.0))


def grad_norm(problem: Problem, lam, u, preconditioned=True) -> float:
    """Energy-space norm of the preconditioned gradient, or sup-norm of the raw one."""
    g = grad(problem, lam, u, preconditioned)
    return energy_norm(problem.grid, g) if preconditioned else norm_inf(g)


@dataclass
class Path:
    nodes: list

    @property
    def m(self) -> int:
        return len(self.nodes) - 1

    def distances(self, grid) -> np.ndarray:
        return np.array([energy_norm(grid, b - a) for a, b in zip(self.nodes, self.nodes[1:])])


@dataclass
class MinimaxResult:
    c: float
    u: np.ndarray = field(repr=False)
    grad_norm: float
    path: Path = field(repr=False)
    iters: int
    max_trace: list = field(repr=False, default_factory=list)
    path_grad_norm: float = 0.0


def _redistribute(grid, nodes, anchor):
    """Equal energy-arclength spacing on each side of the anchor node."""
    m = len(nodes) - 1
    seg = np.array([energy_norm(grid, b - a) for a, b in zip(nodes, nodes[1:])])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return list(nodes), anchor
    k = int(round(m * cum[anchor] / total))
    k = min(max(k, 1), m - 1)

    def place(s):
        j = int(np.searchsorted(cum, s, side="right") - 1)
        j = min(max(j, 0), m - 1)
        w = 0.0 if seg[j] == 0 else (s - cum[j]) / seg[j]
        return (1 - w) * nodes[j] + w * nodes[j + 1]

    new = [nodes[0]]
    new += [place(cum[anchor] * q / k) for q in range(1, k)]
    new.append(nodes[anchor])
    right = total - cum[anchor]
    new += [place(cum[anchor] + right * q / (m - k)) for q in range(1, m - k)]
    new.append(nodes[-1])
    return new, k


def mountain_pass(problem: Problem, lam, endpoint_e, m=32, tol=1e-6, max_iter=50000,
                  reparam_every=10, newton_tol=NEWTON_TOL) -> MinimaxResult:
    """Mountain-pass saddle between 0 and ``endpoint_e``.

    The highest node of a discrete path is pushed down along the part of
    the preconditioned gradient orthogonal to the path; every accepted move
    lowers the path maximum.  When that orthogonal gradient is below
    ``tol`` the highest node is polished by Newton's method.
    """
    grid = problem.grid
    e = grid.check(endpoint_e, "endpoint")
    if m < 8:
        raise ValueError("path needs at least 8 segments")
    if not np.any(e):
        raise NoMountainGeometry("endpoint must be nonzero")
    E0 = energy(problem, lam, grid.zeros())
    Ee = energy(problem, lam, e)
    if not Ee < E0:
        raise NoMountainGeometry(f"E(e) = {Ee:.6g} is not below E(0) = {E0:.6g}")
    nodes = [t * e for t in np.linspace(0.0, 1.0, m + 1)]
    nodes[0] = grid.zeros()
    nodes[-1] = e.copy()
    ens = np.array([energy(problem, lam, v) for v in nodes])
    trace = [float(ens.max())]
    alpha = 1.0
    perp = np.inf
    i = int(np.argmax(ens))
    for it in range(1, max_iter + 1):
        i = int(np.argmax(ens))
        if i == 0 or i == m:
            raise PathCollapsed("path maximum moved to an endpoint")
        g = grad(problem, lam, nodes[i], preconditioned=True)
        tau = nodes[i + 1] - nodes[i - 1]
        tn = energy_norm(grid, tau)
        if tn > 0:
            tau = tau / tn
            g = g - energy_inner(grid, g, tau) * tau
        perp = energy_norm(grid, g)
        if perp <= tol:
            break
        a = alpha
        for _ in range(41):
            trial = nodes[i] - a * g
            Et = energy(problem, lam, trial)
            if Et < ens[i]:
                break
            a *= 0.5
        else:
            # no decrease at round-off level: the orthogonal gradient is noise
            break
        nodes[i] = trial
        ens[i] = Et
        alpha = min(2.0 * a, 1.0)
        if it % reparam_every == 0:
            new, k = _redistribute(grid, nodes, int(np.argmax(ens)))
            new_ens = np.array([energy(problem, lam, v) for v in new])
            if new_ens.max() <= ens.max() + 1e-12:
                nodes, ens = new, new_ens
        trace.append(float(ens.max()))
    else:
        raise MaxIterExceeded(
            f"mountain pass: orthogonal gradient {perp:.3e} > {tol:g} after {max_iter} iterations",
            iterations=max_iter,
        )
    i = int(np.argmax(ens))
    u, _ = newton_solve(problem, lam, nodes[i], newton_tol)
    return MinimaxResult(
        c=energy(problem, lam, u),
        u=u,
        grad_norm=grad_norm(problem, lam, u),
        path=Path(nodes),
        iters=it,
        max_trace=trace,
        path_grad_norm=float(perp),
    )


def translated_problem(problem: Problem, lam, base) -> Problem:
    """Problem for v = u - base: -Lap v = lam (f(base + v) - f(base)).

    Valid when ``base`` solves the original problem at ``lam``.
    """
    grid = problem.grid
    base = grid.check(base, "base").copy()
    nl = problem.nonlinearity
    X = grid.coords
    fb = nl.f(X, base)
    Fb = nl.F(X, base)
    tr = Nonlinearity(
        f"{nl.name}-translated",
        lambda x, v: nl.f(X, base + v) - fb,
        lambda x, v: nl.fprime(X, base + v),
        lambda x, v: nl.F(X, base + v) - Fb - fb * v,
        dict(nl.params),
        convex=nl.convex,
        positive=False,
        f0=0.0,
        fprime0=float(np.min(nl.fprime(X, base))),
        autonomous=False,
    )
    return Problem(grid, tr, float(lam))


def minimal_solution(problem: Problem, lam, tol=NEWTON_TOL) -> np.ndarray:
    """Minimal solution at ``lam``: monotone iteration when barriers exist, else continuation."""
    p = problem.with_lambda(lam)
    try:
        pair = default_barriers(p)
        u, _ = monotone_iterate(p, pair, "from_sub", tol=1e-12)
        u, _ = newton_solve(problem, lam, u, tol)
        return u
    except EllipticError as err:
        log.info("monotone route unavailable (%s); continuing from lambda=0", type(err).__name__)
    diagram = trace_minimal_branch(problem, ContinuationConfig(lambda_max=lam))
    last = diagram.points[-1]
    if diagram.termination != "lambda_max" or abs(last.lam - lam) > 1e-12:
        raise NoMountainGeometry(
            f"minimal branch ended ({diagram.termination}) before lambda={lam}"
        )
    return last.u


@dataclass
class SecondSolution:
    u2: np.ndarray = field(repr=False)
    minimal: np.ndarray = field(repr=False)
    certificate: dict
    result: MinimaxResult = field(repr=False)


def second_solution(problem: Problem, lam, m=32, tol=1e-6, max_iter=50000,
                    minimal=None) -> SecondSolution:
    """Unstable solution above the minimal one via a mountain pass on the translated energy."""
    grid = problem.grid
    u_min = minimal_solution(problem, lam) if minimal is None else grid.check(minimal)
    st = stability_classify(problem, u_min, lam)
    if st.lambda1_lin <= 0:
        raise NoMountainGeometry("minimal solution is not stable; 0 is not a strict local minimum")
    tp = translated_problem(problem, lam, u_min)
    e1 = smallest_eigenpair(assemble(grid)).vector
    base = norm_inf(u_min) or 1.0
    endpoint = None
    for k in range(17):
        cand = (2.0**k * base) * e1
        with np.errstate(over="ignore", invalid="ignore"):
            Ec = energy(tp, lam, cand)
        if np.isfinite(Ec) and Ec < 0:
            endpoint = cand
            break
    if endpoint is None:
        raise NoMountainGeometry("translated energy stays nonnegative along t*e1")
    res = mountain_pass(tp, lam, endpoint, m=m, tol=tol, max_iter=max_iter)
    v = res.u
    u2 = u_min + v
    lam1 = stability_classify(problem, u2, lam).lambda1_lin
    cert = {
        "residual": norm_inf(problem.residual(u2, lam)),
        "residual_scale": residual_scale(problem, u2, lam),
        "lambda1_lin": lam1,
        "min_gap": float(np.min(v)),
        "ordering": bool(np.all(v >= -1e-10)),
        "minimal_lambda1_lin": st.lambda1_lin,
    }
    if not cert["ordering"]:
        raise OrderingFailed(f"second solution dips below the minimal one by {-cert['min_gap']:.3e}")
    return SecondSolution(u2, u_min, cert, res)


@dataclass
class EkelandPoint:
    z: np.ndarray = field(repr=False)
    energy: float
    start_energy: float
    grad_norm: float
    iterations: int
    eps: float = math.inf

    @property
    def verified(self) -> bool:
        return self.energy <= self.start_energy and self.grad_norm <= self.eps


def ekeland_point(problem: Problem, lam, eps, start, max_iter=100000) -> EkelandPoint:
    """Descend from ``start`` until the preconditioned gradient norm is <= eps.

    Armijo backtracking on the energy; the returned values are re-evaluated
    from scratch at the end.
    """
    grid = problem.grid
    z = grid.check(start, "start").copy()
    E_start = energy(problem, lam, z)
    E = E_start
    alpha = 1.0
    for it in range(max_iter + 1):
        g = grad(problem, lam, z, preconditioned=True)
        gn2 = energy_inner(grid, g, g)
        if math.sqrt(max(gn2, 0.0)) <= eps:
            break
        if it == max_iter:
            raise MaxIterExceeded(f"Ekeland descent: gradient {math.sqrt(gn2):.3e} > {eps:g}",
                                  iterations=max_iter)
        a = alpha
        while True:
            trial = z - a * g
            Et = energy(problem, lam, trial)
            if Et <= E - 1e-4 * a * gn2:
                break
            a *= 0.5
            if a < 1e-20:
                raise MaxIterExceeded("Ekeland descent: line search failed", iterations=it)
        z, E = trial, Et
        alpha = min(2.0 * a, 1.0)
    return EkelandPoint(z, energy(problem, lam, z), E_start, grad_norm(problem, lam, z), it, eps)


def constrained_minimum(grid, p, x0=None):
    """m = min { |grad v|^2 : |v|_{L^{p+1}} = 1 } over grid fields.

    Minimizes the scale-invariant quotient by L-BFGS; returns (m, v) with v
    normalized.
    """
    L = laplacian(grid)
    q = p + 1.0

    def quotient(v):
        a = grid.inner(v, L @ v)
        b = grid.integrate(np.abs(v) ** q) ** (2.0 / q)
        ga = 2.0 * grid.cell * (L @ v)
        nb = grid.integrate(np.abs(v) ** q)
        gb = (2.0 / q) * nb ** (2.0 / q - 1.0) * q * grid.cell * np.abs(v) ** (q - 1) * np.sign(v)
        return a / b, (ga * b - a * gb) / b**2

    v0 = x0 if x0 is not None else smallest_eigenpair(assemble(grid)).vector
    out = minimize(quotient, v0, jac=True, method="L-BFGS-B",
                   options={"maxiter": 20000, "gtol": 1e-12, "ftol": 1e-15})
    v = out.x / grid.integrate(np.abs(out.x) ** q) ** (1.0 / q)
    return float(out.fun), v
