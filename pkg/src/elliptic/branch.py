"""Newton solves and continuation in lambda for -Lap u = lambda f(u).

The minimal branch is traced by natural continuation from (0, 0) with the
exact tangent u_lambda = (-Lap_h - lambda f'(u))^{-1} f(u) as predictor;
folds are located through the smallest linearized eigenvalue and traversed
by pseudo-arclength continuation in (u, lambda).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, solve_banded
from scipy.sparse.linalg import splu

from .barriers import classify, stability_classify
from .exceptions import EllipticError, NoConvergence, NoFold, SingularJacobian, StepCollapse
from .grid import norm_inf
from .linops import lambda1_exact, laplacian
from .problems import Problem

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-10


def residual_norm(problem: Problem, u, lam) -> float:
    return norm_inf(problem.residual(u, lam))


def residual_scale(problem: Problem, u, lam) -> float:
    """Reference size for residual tolerances: 1 + |lam f(u)|_inf."""
    return 1.0 + norm_inf(problem.rhs(u, lam))


def _jacobian(problem: Problem, u, lam) -> sp.csr_matrix:
    return (laplacian(problem.grid) - sp.diags(problem.rhs_prime(u, lam))).tocsr()


def _jsolve(problem: Problem, J, rhs):
    try:
        if problem.grid.dim == 1:
            ab = np.zeros((3, rhs.size))
            ab[0, 1:] = J.diagonal(1)
            ab[1] = J.diagonal()
            ab[2, :-1] = J.diagonal(-1)
            x = solve_banded((1, 1), ab, rhs, check_finite=False)
        else:
            x = splu(J.tocsc()).solve(rhs)
    except (LinAlgError, RuntimeError) as err:
        raise SingularJacobian(str(err)) from None
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("Jacobian solve produced non-finite values")
    return x


def newton_solve(problem: Problem, lam, guess=None, tol=NEWTON_TOL, max_iter=50):
    """Damped Newton for -Lap_h u = lam f(u) + g.

    Converged when |residual|_inf <= tol * (1 + |lam f(u)|_inf).  Each step
    is halved (at most 30 times) until the residual norm decreases.
    Returns ``(u, iterations)``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    grid = problem.grid
    u = grid.zeros() if guess is None else grid.check(guess, "guess").copy()
    with np.errstate(over="ignore", invalid="ignore"):
        r = problem.residual(u, lam)
        rn = norm_inf(r)
        for it in range(max_iter + 1):
            if np.isfinite(rn) and rn <= tol * residual_scale(problem, u, lam):
                return u, it
            if it == max_iter or not np.isfinite(rn):
                break
            delta = _jsolve(problem, _jacobian(problem, u, lam), -r)
            t = 1.0
            for _ in range(31):
                trial = u + t * delta
                r_trial = problem.residual(trial, lam)
                rn_trial = norm_inf(r_trial)
                if np.isfinite(rn_trial) and rn_trial < rn:
                    break
                t *= 0.5
            else:
                raise NoConvergence(
                    f"no residual decrease after 30 halvings (residual {rn:.3e})",
                    iterations=it, residual=rn,
                )
            u, r, rn = trial, r_trial, rn_trial
    raise NoConvergence(f"Newton stopped at residual {rn:.3e}", iterations=max_iter, residual=rn)


@dataclass
class BranchPoint:
    lam: float
    u: np.ndarray = field(repr=False)
    lambda1_lin: float
    tag: str
    arclength: float = 0.0
    newton_iters: int = 0
    branch: str = "minimal"

    @property
    def sup_norm(self) -> float:
        return norm_inf(self.u)


@dataclass
class Diagram:
    grid: object = field(repr=False)
    points: list = field(default_factory=list)
    fold: Optional[dict] = None
    termination: str = ""

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([p.sup_norm for p in self.points])

    @property
    def lambda1s(self) -> np.ndarray:
        return np.array([p.lambda1_lin for p in self.points])

    def minimal_prefix(self) -> list:
        return [p for p in self.points if p.branch == "minimal"]

    def unstable_suffix(self) -> list:
        return [p for p in self.points if p.branch == "upper"]

    def rows(self):
        for p in self.points:
            yield {
                "lambda": p.lam,
                "sup_norm": p.sup_norm,
                "l2_norm": self.grid.norm_l2(p.u),
                "lambda1_lin": p.lambda1_lin,
                "tag": p.tag,
                "arclength": p.arclength,
            }


@dataclass
class ContinuationConfig:
    dlam0: Optional[float] = None
    min_step: float = 1e-8
    lambda_max: float = math.inf
    lambda_min: float = 0.0
    norm_cap: float = 1e3
    blowup: float = 1e12
    guard: float = 0.2
    newton_tol: float = NEWTON_TOL
    newton_max_iter: int = 30
    ds0: float = 0.05
    ds_max: float = 0.5
    max_points: int = 2000


def _default_dlam(problem: Problem) -> float:
    lam1 = lambda1_exact(problem.grid)
    fp0 = problem.nonlinearity.fprime0
    return 0.05 * lam1 / fp0 if fp0 > 0 else 0.05 * lam1


def _point(problem, lam, u, iters, arclength, branch) -> BranchPoint:
    st = stability_classify(problem, u, lam)
    return BranchPoint(float(lam), u, st.lambda1_lin, st.tag, arclength, iters, branch)


def _distance(grid, u1, l1, u2, l2) -> float:
    d = u1 - u2
    return math.sqrt(grid.cell * float(d @ d) + (l1 - l2) ** 2)


def _classify_end(diagram: Diagram, lam1: float) -> str:
    """Fold if the sup-norm stays bounded as lambda1_lin -> 0, asymptote if it blows up."""
    pts = diagram.points
    last = pts[-1]
    if last.lambda1_lin > 0.05 * lam1:
        return "stalled"
    # log-log slope of sup-norm against lambda1_lin over the last decade
    ref = None
    for p in reversed(pts[:-1]):
        if p.lambda1_lin >= 10.0 * max(last.lambda1_lin, 1e-300):
            ref = p
            break
    if ref is None or last.lambda1_lin <= 0:
        return "fold"
    slope = math.log(last.sup_norm / ref.sup_norm) / math.log(last.lambda1_lin / ref.lambda1_lin)
    return "asymptote" if slope < -0.5 else "fold"


def trace_minimal_branch(problem: Problem, config: ContinuationConfig | None = None) -> Diagram:
    """Natural continuation of the minimal branch starting at (0, 0)."""
    cfg = config or ContinuationConfig()
    grid = problem.grid
    lam1 = lambda1_exact(grid)
    dlam0 = cfg.dlam0 or _default_dlam(problem)
    diagram = Diagram(grid)
    u, it = newton_solve(problem, 0.0, grid.zeros(), cfg.newton_tol)
    diagram.points.append(_point(problem, 0.0, u, it, 0.0, "minimal"))
    lam, s = 0.0, 0.0
    dlam = dlam0
    while True:
        cur = diagram.points[-1]
        if len(diagram.points) >= cfg.max_points:
            diagram.termination = "max_points"
            break
        if lam >= cfg.lambda_max:
            diagram.termination = "lambda_max"
            break
        if cur.sup_norm > cfg.blowup:
            diagram.termination = "asymptote"
            break
        if dlam < cfg.min_step:
            diagram.termination = _classify_end(diagram, lam1)
            break
        step = min(dlam, cfg.lambda_max - lam)
        new_lam = lam + step
        try:
            J = _jacobian(problem, u, lam)
            u_lam = _jsolve(problem, J, problem.nonlinearity.f(grid.coords, u))
            guess = u + step * u_lam
            u_new, it = newton_solve(problem, new_lam, guess, cfg.newton_tol, cfg.newton_max_iter)
            pt = _point(problem, new_lam, u_new, it, 0.0, "minimal")
        except EllipticError:
            dlam = 0.5 * step
            continue
        if (pt.lambda1_lin < cfg.guard * cur.lambda1_lin
                or np.any(u_new < cur.u - 1e-10 * (1.0 + np.abs(cur.u)))):
            dlam = 0.5 * step
            continue
        s += _distance(grid, u_new, new_lam, u, lam)
        pt.arclength = s
        diagram.points.append(pt)
        u, lam = u_new, new_lam
        dlam = min(1.5 * step, dlam0)
    if diagram.termination == "fold":
        last = diagram.points[-1]
        diagram.fold = {"lambda_star": last.lam, "u_star_supnorm": last.sup_norm, "refined": False}
    log.info("minimal branch: %d points, termination %s", len(diagram.points), diagram.termination)
    return diagram


# --- pseudo-arclength ----------------------------------------------------


def _bordered(problem, u, lam, tau_u, tau_l):
    grid = problem.grid
    J = _jacobian(problem, u, lam)
    fu = problem.nonlinearity.f(grid.coords, u)
    return sp.bmat(
        [[J, sp.csr_matrix(-fu[:, None])],
         [sp.csr_matrix(grid.cell * tau_u[None, :]), sp.csr_matrix([[tau_l]])]],
        format="csc",
    )


def _bsolve(M, rhs):
    try:
        x = splu(M).solve(rhs)
    except RuntimeError as err:
        raise SingularJacobian(str(err)) from None
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("bordered solve produced non-finite values")
    return x


def _normalize(grid, tau_u, tau_l):
    nrm = math.sqrt(grid.cell * float(tau_u @ tau_u) + tau_l**2)
    return tau_u / nrm, tau_l / nrm


def _tangent(problem, u, lam, ref_u, ref_l):
    """Unit tangent of the solution curve at (u, lam), oriented along ref."""
    grid = problem.grid
    M = _bordered(problem, u, lam, ref_u, ref_l)
    rhs = np.zeros(grid.size + 1)
    rhs[-1] = 1.0
    t = _bsolve(M, rhs)
    return _normalize(grid, t[:-1], t[-1])


def _corrector(problem, u0, l0, tau_u, tau_l, ds, tol, max_iter=15):
    """Newton on {F(u, lam) = 0, <tau, (u, lam) - (u0, l0)> = ds}."""
    grid = problem.grid
    u = u0 + ds * tau_u
    lam = l0 + ds * tau_l
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(max_iter + 1):
            r = problem.residual(u, lam)
            c = grid.cell * float(tau_u @ (u - u0)) + tau_l * (lam - l0) - ds
            if not np.all(np.isfinite(r)):
                break
            if norm_inf(r) <= tol * residual_scale(problem, u, lam) and abs(c) <= 1e-12 * (1 + abs(ds)):
                return u, lam, it
            if it == max_iter:
                break
            d = _bsolve(_bordered(problem, u, lam, tau_u, tau_l), -np.append(r, c))
            u = u + d[:-1]
            lam = lam + d[-1]
    raise NoConvergence("arclength corrector failed")


def pseudo_arclength_continue(problem: Problem, diagram: Diagram,
                              config: ContinuationConfig | None = None) -> Diagram:
    """Extend a diagram past its fold onto the upper (unstable) branch.

    Points are appended in place; the diagram is also returned.
    """
    cfg = config or ContinuationConfig()
    grid = problem.grid
    lam1 = lambda1_exact(grid)
    if len(diagram.points) < 2:
        raise ValueError("need at least two diagram points to orient the tangent")
    p1, p0 = diagram.points[-1], diagram.points[-2]
    ref_u, ref_l = _normalize(grid, p1.u - p0.u, p1.lam - p0.lam)
    u, lam = p1.u, p1.lam
    tau_u, tau_l = _tangent(problem, u, lam, ref_u, ref_l)
    ds = cfg.ds0
    s = p1.arclength
    branch = p1.branch
    diagram.termination = ""
    while True:
        if len(diagram.points) >= cfg.max_points:
            diagram.termination = "max_points"
            break
        try:
            u_new, lam_new, it = _corrector(problem, u, lam, tau_u, tau_l, ds, cfg.newton_tol)
            pt = _point(problem, lam_new, u_new, it, 0.0, branch)
        except EllipticError:
            ds *= 0.5
            if ds < cfg.min_step:
                raise StepCollapse(f"arclength step fell below {cfg.min_step:g} at lambda={lam:.6g}")
            continue
        prev = diagram.points[-1]
        if prev.lambda1_lin > 0 >= pt.lambda1_lin or (branch == "minimal" and lam_new < lam):
            branch = "upper"
        pt.branch = branch
        s += ds
        pt.arclength = s
        diagram.points.append(pt)
        tau_u, tau_l = _tangent(problem, u_new, lam_new, tau_u, tau_l)
        u, lam = u_new, lam_new
        if it <= 3:
            # step cap relative to the size of the state
            size = math.sqrt(grid.cell * float(u @ u) + lam**2)
            ds = min(1.5 * ds, cfg.ds_max * max(1.0, size))
        if pt.sup_norm > cfg.norm_cap:
            diagram.termination = "norm_cap"
            break
        if lam < cfg.lambda_min:
            diagram.termination = "lambda_min"
            break
        if lam > cfg.lambda_max:
            diagram.termination = "lambda_max"
            break
    _mark_fold(diagram)
    return diagram


def _mark_fold(diagram: Diagram):
    pts = diagram.points
    for a, b in zip(pts, pts[1:]):
        if a.lambda1_lin > 0 >= b.lambda1_lin:
            best = a if abs(a.lambda1_lin) <= abs(b.lambda1_lin) else b
            if diagram.fold is None or not diagram.fold.get("refined"):
                diagram.fold = {"lambda_star": max(a.lam, b.lam), "u_star_supnorm": best.sup_norm, "refined": False}
            return True
    return False


def _fold_bracket(diagram: Diagram):
    pts = diagram.points
    for a, b in zip(pts, pts[1:]):
        if a.lambda1_lin > 0 >= b.lambda1_lin:
            return a, b
    return None


def estimate_lambda_star(target, problem: Problem | None = None, tol_rel=1e-6,
                         config: ContinuationConfig | None = None) -> float:
    """Refine the fold lambda* where lambda1(-Lap_h - lambda f'(u)) = 0.

    ``target`` is a Diagram (then ``problem`` is required) or a Problem.
    The zero of lambda1_lin is bracketed along the curve and located by an
    Illinois secant in arclength, re-solving the extended system at each
    trial.  Raises NoFold when the branch ends in an asymptote.
    """
    if isinstance(target, Problem):
        problem = target
        diagram = trace_minimal_branch(problem, config)
    else:
        diagram = target
        if problem is None:
            raise ValueError("problem is required with a diagram")
    grid = problem.grid
    lam1 = lambda1_exact(grid)
    bracket = _fold_bracket(diagram)
    if bracket is None:
        if diagram.termination != "fold" and (diagram.fold is None):
            raise NoFold(f"branch terminated by {diagram.termination or 'unknown'}; no fold detected")
        ext = Diagram(grid, list(diagram.points[-2:]), diagram.fold, diagram.termination)
        cfg = ContinuationConfig(max_points=len(ext.points) + 6, ds0=1e-3, norm_cap=math.inf)
        pseudo_arclength_continue(problem, ext, cfg)
        bracket = _fold_bracket(ext)
        if bracket is None:
            raise NoFold("no sign change of lambda1_lin near the end of the branch")
    a, b = bracket
    tau_u, tau_l = _normalize(grid, b.u - a.u, b.lam - a.lam)
    tol = tol_rel * lam1

    def solve_at(s):
        u, lam, _ = _corrector(problem, a.u, a.lam, tau_u, tau_l, s, NEWTON_TOL, 30)
        return u, lam, stability_classify(problem, u, lam).lambda1_lin

    s_lo, s_hi = 0.0, grid.cell * float(tau_u @ (b.u - a.u)) + tau_l * (b.lam - a.lam)
    g_lo, g_hi = a.lambda1_lin, b.lambda1_lin
    best = (a.lam, a.u, g_lo)
    side = 0
    for _ in range(100):
        if abs(g_lo) <= tol:
            best = (a.lam, a.u, g_lo) if s_lo == 0.0 else best
            break
        s = (s_lo * g_hi - s_hi * g_lo) / (g_hi - g_lo)
        u, lam, g = solve_at(s)
        best = (lam, u, g)
        if abs(g) <= tol:
            break
        if g > 0:
            s_lo, g_lo = s, g
            if side == 1:
                g_hi *= 0.5
            side = 1
        else:
            s_hi, g_hi = s, g
            if side == -1:
                g_lo *= 0.5
            side = -1
    lam_star, u_star, g = best
    if abs(g) > tol:
        raise NoConvergence(f"fold refinement stalled at lambda1_lin={g:.3e}")
    fp0 = problem.nonlinearity.fprime0
    if fp0 > 0 and lam_star > lam1 / fp0 + 1e-8:
        raise EllipticError(f"lambda* = {lam_star} violates the bound lambda1_h/f'(0) = {lam1 / fp0}")
    diagram.fold = {"lambda_star": float(lam_star), "u_star_supnorm": norm_inf(u_star),
                    "lambda1_lin": float(g), "refined": True}
    return float(lam_star)


def solve_on_branch(problem: Problem, diagram: Diagram, lam, branch="upper", tol=NEWTON_TOL):
    """Newton solve at ``lam`` seeded by interpolating the requested branch part."""
    pts = [p for p in diagram.points if p.branch == branch]
    for a, b in zip(pts, pts[1:]):
        lo, hi = sorted((a.lam, b.lam))
        if lo <= lam <= hi:
            w = 0.0 if hi == lo else (lam - a.lam) / (b.lam - a.lam)
            guess = (1 - w) * a.u + w * b.u
            u, _ = newton_solve(problem, lam, guess, tol)
            return u
    raise ValueError(f"lambda={lam} not covered by the {branch} part of the diagram")
