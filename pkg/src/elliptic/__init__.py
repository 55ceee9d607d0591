"""Finite-difference solvers for semilinear elliptic problems -Lap u = lambda f(x, u)."""
from .barriers import (
    BarrierPair,
    default_barriers,
    monotone_iterate,
    stability_classify,
    verify_barrier,
)
from .branch import (
    ContinuationConfig,
    Diagram,
    estimate_lambda_star,
    newton_solve,
    pseudo_arclength_continue,
    solve_on_branch,
    trace_minimal_branch,
)
from .estimators import BranchContinuation, MonotoneSolver, SecondSolutionFinder
from .grid import Grid, build_grid, integrate, norm_h1, norm_inf
from .linops import assemble, lambda1_exact, laplacian, smallest_eigenpair, solve
from .minimax import (
    constrained_minimum,
    ekeland_point,
    energy,
    grad,
    mountain_pass,
    second_solution,
)
from .problems import Nonlinearity, Problem, bratu_oracle, catalog, make_problem, shooting_oracle

__all__ = [
    "BarrierPair", "BranchContinuation", "ContinuationConfig", "Diagram", "Grid",
    "MonotoneSolver", "Nonlinearity", "Problem", "SecondSolutionFinder", "assemble",
    "bratu_oracle", "build_grid", "catalog", "constrained_minimum", "default_barriers",
    "ekeland_point", "energy", "estimate_lambda_star", "grad", "integrate", "lambda1_exact",
    "laplacian", "make_problem", "monotone_iterate", "mountain_pass", "newton_solve",
    "norm_h1", "norm_inf", "pseudo_arclength_continue", "second_solution", "shooting_oracle",
    "smallest_eigenpair", "solve", "solve_on_branch", "stability_classify",
    "trace_minimal_branch", "verify_barrier",
]
__version__ = "0.1.0"
