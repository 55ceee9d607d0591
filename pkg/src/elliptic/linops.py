"""Shifted discrete Laplacians -Lap_h + diag(c): apply, solve, smallest eigenpair."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import cg, splu

from .exceptions import NoConvergence, NotCoercive
from .grid import Grid

log = logging.getLogger(__name__)

EIG_TOL = 1e-10
SOLVE_RTOL_2D = 1e-10


def _second_difference(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


@lru_cache(maxsize=32)
def laplacian(grid: Grid) -> sp.csr_matrix:
    """-Lap_h with zero Dirichlet data (3- or 5-point stencil)."""
    if grid.dim == 1:
        return _second_difference(grid.n, grid.h)
    nx, ny = grid.counts
    hx, hy = grid.spacing
    Dx = _second_difference(nx, hx)
    Dy = _second_difference(ny, hy)
    return (sp.kron(Dx, sp.identity(ny)) + sp.kron(sp.identity(nx), Dy)).tocsr()


def lambda1_exact(grid: Grid) -> float:
    """Closed-form smallest eigenvalue of -Lap_h on the grid."""
    return sum(
        4.0 / h**2 * np.sin(np.pi * h / (2.0 * (b - a))) ** 2
        for h, (a, b) in zip(grid.spacing, grid.extents)
    )


@dataclass(frozen=True)
class ShiftedLaplacian:
    grid: Grid
    shift: np.ndarray
    matrix: sp.csr_matrix = field(repr=False, compare=False)

    def __matmul__(self, u):
        return self.matrix @ u

    def apply(self, u) -> np.ndarray:
        return self.matrix @ self.grid.check(u)

    def form(self, u, v) -> float:
        """Quadrature form <u, A v> on the grid."""
        return self.grid.inner(u, self.apply(v))

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def gershgorin_lower(self) -> float:
        d = self.diagonal
        off = np.asarray(abs(self.matrix).sum(axis=1)).ravel() - np.abs(d)
        return float(np.min(d - off))

    def banded(self) -> np.ndarray:
        """(3, n) LAPACK band storage, 1-D only."""
        d = self.diagonal
        ab = np.zeros((3, d.size))
        ab[0, 1:] = self.matrix.diagonal(1)
        ab[1] = d
        ab[2, :-1] = self.matrix.diagonal(-1)
        return ab


def assemble(grid: Grid, c=None) -> ShiftedLaplacian:
    if c is None:
        c = grid.zeros()
    elif np.isscalar(c):
        c = np.full(grid.size, float(c))
    else:
        c = grid.check(c, "shift")
    c = np.array(c, dtype=float)
    c.setflags(write=False)
    M = (laplacian(grid) + sp.diags(c)).tocsr()
    return ShiftedLaplacian(grid, c, M)


def solve(A: ShiftedLaplacian, rhs, check_coercive=True, rtol=SOLVE_RTOL_2D) -> np.ndarray:
    """Solve A u = rhs for a coercive shifted Laplacian.

    Negative shift entries trigger an explicit eigenvalue check.  1-D uses
    banded elimination, 2-D conjugate gradients.
    """
    rhs = A.grid.check(rhs, "rhs")
    if check_coercive and np.any(A.shift < 0):
        lam = smallest_eigenpair(A).value
        if lam <= 1e-12:
            raise NotCoercive(f"smallest eigenvalue {lam:.3e} is not positive")
    if not np.any(rhs):
        return np.zeros_like(rhs)
    if A.grid.dim == 1:
        return solve_banded((1, 1), A.banded(), rhs, check_finite=False)
    it = 0

    def count(_):
        nonlocal it
        it += 1

    maxiter = 20 * A.grid.size
    u, info = cg(A.matrix, rhs, rtol=rtol, atol=0.0, maxiter=maxiter, callback=count)
    if info != 0:
        res = float(np.max(np.abs(A.matrix @ u - rhs)))
        raise NoConvergence(f"CG stalled after {it} iterations", iterations=it, residual=res)
    return u


def _unit(grid: Grid, v: np.ndarray) -> np.ndarray:
    v = v / grid.norm_l2(v)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def smallest_eigenpair(A: ShiftedLaplacian, tol=EIG_TOL, max_iter=5000, v0=None) -> EigenPair:
    """Algebraically smallest eigenpair by shifted inverse iteration.

    Starts from the Gershgorin lower bound so that A - sigma is positive
    definite; once the iterate is dominated by the bottom mode the shift is
    moved up to the current Rayleigh quotient minus a residual margin.
    """
    grid = A.grid
    M = A.matrix.tocsc()
    n = grid.size
    eye = sp.identity(n, format="csc")
    sigma = A.gershgorin_lower() - 1e-3 * (1.0 + abs(A.gershgorin_lower()))
    lu = splu((M - sigma * eye).tocsc())
    if v0 is None:
        # positive start overlaps the principal mode
        v = grid.sample(lambda *x: np.prod([np.sin(np.pi * (xi - a) / (b - a)) for xi, (a, b) in zip(x, grid.extents)], axis=0))
        v = v + 1e-3 * np.linspace(0.5, 1.0, n)
    else:
        v = np.array(v0, dtype=float)
    v = _unit(grid, v)
    mu = v @ (M @ v) / (v @ v)
    scale = 1.0 + abs(mu)
    refined = False
    res = np.inf
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        if not np.all(np.isfinite(w)):
            # shift landed on an eigenvalue: nudge it
            sigma -= 1e-6 * scale
            lu = splu((M - sigma * eye).tocsc())
            continue
        v = _unit(grid, w)
        Mv = M @ v
        mu_new = v @ Mv / (v @ v)
        r = Mv - mu_new * v
        res = float(np.max(np.abs(r)))
        dmu = abs(mu_new - mu)
        mu = mu_new
        if res <= tol * (1.0 + abs(mu)) and dmu <= tol * (1.0 + abs(mu)):
            return EigenPair(float(mu), v, res, it)
        if not refined and dmu <= 1e-4 * (1.0 + abs(mu)):
            rl2 = grid.norm_l2(r)
            sigma = mu - max(10.0 * rl2, 1e-6 * (1.0 + abs(mu)))
            lu = splu((M - sigma * eye).tocsc())
            refined = True
    raise NoConvergence(
        f"inverse iteration did not converge (residual {res:.3e})",
        iterations=max_iter,
        residual=res,
    )
