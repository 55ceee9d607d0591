"""Sub/supersolutions, monotone iteration between them, linearized stability."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    EpsilonExhausted,
    GrowthBoundUnavailable,
    MaxIterExceeded,
    OrderingViolated,
)
from .grid import norm_inf
from .linops import assemble, laplacian, lambda1_exact, smallest_eigenpair, solve
from .problems import Problem

log = logging.getLogger(__name__)

ORDER_TOL = 1e-12
SHIFT_SAMPLES = 32
SHIFT_MARGIN = 1e-6


@dataclass
class BarrierPair:
    sub: np.ndarray
    super: np.ndarray
    sub_ok: bool = False
    super_ok: bool = False
    ordering_ok: bool = False

    @property
    def verified(self):
        return {"sub": self.sub_ok, "super": self.super_ok}


@dataclass
class MonotoneTrace:
    direction: str
    shift_a: float
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    @property
    def iterations(self):
        return len(self.iterates) - 1


def verify_barrier(problem: Problem, u, side: str):
    """Check -Lap_h u <= rhs(u) (side 'sub') or >= (side 'super') nodewise.

    Returns ``(ok, worst_violation)`` where the violation is the largest
    amount by which the inequality fails (<= 0 when it holds everywhere).
    """
    if side not in ("sub", "super"):
        raise ValueError(f"side must be 'sub' or 'super', got {side!r}")
    u = problem.grid.check(u)
    lap = laplacian(problem.grid) @ u
    rhs = problem.rhs(u)
    gap = lap - rhs if side == "sub" else rhs - lap
    scale = 1.0 + max(norm_inf(lap), norm_inf(rhs))
    worst = float(np.max(gap))
    return bool(worst <= 1e-10 * scale), worst


def _ordering_ok(sub, sup):
    return bool(np.all(sub <= sup + ORDER_TOL * (1.0 + np.abs(sup))))


def _growth_super(problem: Problem, a: float, cap: float, samples: int):
    """Supersolution C' (-Lap_h - a)^{-1} 1 from the bound rhs(u) sign u <= a|u| + C on [-cap, cap]."""
    grid = problem.grid
    t = np.linspace(-cap, cap, samples)
    if problem.nonlinearity.autonomous:
        x = np.zeros(1)
        vals = problem.lam * problem.nonlinearity.f(x, t)
        C = float(np.max(vals * np.sign(t) - a * np.abs(t)))
    else:
        X = grid.coords
        C = -np.inf
        for ti in t:
            fx = problem.lam * problem.nonlinearity.f(X, np.full(grid.size, ti))
            C = max(C, float(np.max(fx * np.sign(ti) - a * abs(ti))))
    if not np.isfinite(C):
        return None
    C = max(C, 0.0)
    if problem.forcing is not None:
        C += norm_inf(problem.forcing)
    if C == 0.0:
        return grid.zeros()
    return solve(assemble(grid, -a), C * grid.ones())



def default_barriers(problem: Problem, caps=None, samples=2001) -> BarrierPair:
    """Build an ordered sub/supersolution pair automatically.

    The supersolution solves (-Lap_h - a) S = C' for a sampled growth bound
    with a < lambda1_h; the search runs over slopes a and sampling caps and
    keeps the first S that stays inside the sampled range and verifies.
    The subsolution is -S, or eps*phi1 when the linearization at 0 has
    slope above lambda1_h.
    """
    grid = problem.grid
    lam1 = lambda1_exact(grid)
    if caps is None:
        caps = [0.25 * 2.0**k for k in range(12)]
    nl = problem.nonlinearity
    slopes = [0.0, 0.25 * lam1, 0.5 * lam1, 0.75 * lam1, 0.9 * lam1]
    if nl.slope_a is not None and 0 <= problem.lam * nl.slope_a < lam1:
        slopes.insert(0, problem.lam * nl.slope_a)
    sup = None
    for cap in caps:
        for a in slopes:
            with np.errstate(over="ignore", invalid="ignore"):
                S = _growth_super(problem, a, cap, samples)
            if S is None or norm_inf(S) > cap:
                continue
            if verify_barrier(problem, S, "super")[0]:
                sup = S
                break
        if sup is not None:
            break
    if sup is None:
        raise GrowthBoundUnavailable(
            f"no growth bound f sign u <= a|u| + C with a < lambda1_h found on caps up to {caps[-1]}"
        )
    sub = -sup
    fprime0 = problem.lam * nl.fprime0
    if fprime0 > lam1 and problem.forcing is None:
        phi = smallest_eigenpair(assemble(grid)).vector
        eps = 1.0
        for _ in range(61):
            cand = eps * phi
            if verify_barrier(problem, cand, "sub")[0] and _ordering_ok(cand, sup):
                sub = cand
                break
            eps *= 0.5
        else:
            raise EpsilonExhausted("eps*phi1 never verified as a subsolution")
    return BarrierPair(
        sub, sup,
        sub_ok=verify_barrier(problem, sub, "sub")[0],
        super_ok=True,
        ordering_ok=_ordering_ok(sub, sup),
    )


def shift_for(problem: Problem, sub, sup, samples=SHIFT_SAMPLES):
    """Smallest sampled a >= 0 making u -> rhs(u) + a u increasing on [sub, sup].

    Also returns the sampled Lipschitz bound of rhs on the same range.
    """
    s = np.linspace(0.0, 1.0, samples)[:, None]
    U = sub[None, :] + s * (sup - sub)[None, :]
    d = np.array([problem.rhs_prime(row) for row in U])
    a = max(0.0, float(np.max(-d))) + SHIFT_MARGIN
    return a, float(np.max(np.abs(d)))


def _iterate(problem, start, bound, direction, a, tol, max_iter):
    grid = problem.grid
    A = assemble(grid, a)
    lap = laplacian(grid)
    trace = MonotoneTrace(direction, a, [start.copy()], [])
    u = start
    sign = -1.0 if direction == "from_super" else 1.0
    for _ in range(max_iter):
        u_new = solve(A, problem.rhs(u) + a * u)
        step = sign * (u_new - u)
        scale = ORDER_TOL * (1.0 + np.abs(u))
        if np.any(step < -scale):
            raise OrderingViolated(
                f"{direction} iterate not monotone (worst {float(np.min(step)):.3e})"
            )
        bad = sign * (u_new - bound)
        if np.any(bad > ORDER_TOL * (1.0 + np.abs(bound))):
            raise OrderingViolated(f"{direction} iterate crossed the opposite barrier")
        trace.iterates.append(u_new)
        trace.residuals.append(norm_inf(lap @ u_new - problem.rhs(u_new)))
        if norm_inf(u_new - u) <= tol:
            return u_new, trace
        u = u_new
    raise MaxIterExceeded(
        f"monotone iteration did not reach {tol:g} in {max_iter} steps",
        iterations=max_iter,
        residual=trace.residuals[-1] if trace.residuals else None,
    )


def monotone_iterate(problem: Problem, pair: BarrierPair, direction="from_super",
                     tol=1e-10, max_iter=10000):
    """Monotone iteration -Lap u_n + a u_n = rhs(u_{n-1}) + a u_{n-1}.

    ``from_super`` starts at the supersolution and decreases to the maximal
    solution of the pair; ``from_sub`` increases to the minimal one.
    Returns ``(solution, trace)``.
    """
    if direction in ("super", "sub"):
        direction = "from_" + direction
    if direction not in ("from_super", "from_sub"):
        raise ValueError(f"unknown direction {direction!r}")
    if not pair.ordering_ok:
        raise OrderingViolated("barrier pair is not ordered")
    if not (pair.sub_ok and pair.super_ok):
        raise ValueError("both barriers must be verified before iterating")
    sub = problem.grid.check(pair.sub, "sub")
    sup = problem.grid.check(pair.super, "super")
    a, lip = shift_for(problem, sub, sup)
    start, bound = (sup, sub) if direction == "from_super" else (sub, sup)
    try:
        u, trace = _iterate(problem, start, bound, direction, a, tol, max_iter)
    except OrderingViolated:
        log.info("ordering violated with shift %.3g, retrying with %.3g", a, 2 * a)
        a = 2 * a
        u, trace = _iterate(problem, start, bound, direction, a, tol, max_iter)
    trace.residual_bound = 10.0 * tol * (a + lip)
    return u, trace


@dataclass(frozen=True)
class Stability:
    lambda1_lin: float
    tag: str
    vector: np.ndarray = field(repr=False, default=None)

    def __iter__(self):
        return iter((self.lambda1_lin, self.tag))


def stability_threshold(grid) -> float:
    return 1e-8 * (1.0 + lambda1_exact(grid))


def classify(value: float, grid) -> str:
    theta = stability_threshold(grid)
    if value > theta:
        return "stable"
    if value < -theta:
        return "unstable"
    return "semistable"


def stability_classify(problem: Problem, u, lam=None) -> Stability:
    """Smallest eigenvalue of -Lap_h - lam f'(u) and its stability tag."""
    u = problem.grid.check(u)
    pair = smallest_eigenpair(assemble(problem.grid, -problem.rhs_prime(u, lam)))
    return Stability(pair.value, classify(pair.value, problem.grid), pair.vector)
