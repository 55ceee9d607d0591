"""scikit-learn style front ends.

Each estimator maps parameter values lambda (``X``, one per row) to
solution fields, so solvers can sit inside pipelines, grid searches and
``clone``.  Constructor arguments are stored untouched; all work happens
in ``fit``/``transform``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .barriers import default_barriers, monotone_iterate, stability_classify
from .branch import (
    ContinuationConfig,
    estimate_lambda_star,
    pseudo_arclength_continue,
    solve_on_branch,
    trace_minimal_branch,
)
from .exceptions import NoFold
from .grid import build_grid, norm_inf
from .minimax import second_solution
from .problems import Problem, catalog
from .validation import check_lambdas


class _ProblemMixin:
    def _build(self):
        self.grid_ = build_grid(self.dim, self.n)
        self.nonlinearity_ = catalog(self.problem, **(self.params or {}))
        self.problem_ = Problem(self.grid_, self.nonlinearity_)


class MonotoneSolver(_ProblemMixin, TransformerMixin, BaseEstimator):
    """lambda -> solution of the barrier pair by monotone iteration."""

    def __init__(self, problem="gelfand", params=None, n=99, dim=1,
                 direction="from_super", tol=1e-10, max_iter=10000):
        self.problem = problem
        self.params = params
        self.n = n
        self.dim = dim
        self.direction = direction
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        self._build()
        return self

    def transform(self, X):
        check_is_fitted(self, "problem_")
        lams = check_lambdas(X)
        out = np.empty((lams.size, self.grid_.size))
        self.lambda1_lin_ = np.empty(lams.size)
        for k, lam in enumerate(lams):
            p = self.problem_.with_lambda(lam)
            u, _ = monotone_iterate(p, default_barriers(p), self.direction, self.tol, self.max_iter)
            out[k] = u
            self.lambda1_lin_[k] = stability_classify(p, u).lambda1_lin
        return out


class BranchContinuation(_ProblemMixin, BaseEstimator):
    """Bifurcation diagram of -Lap u = lambda f(u).

    ``fit`` traces the minimal branch (and the upper branch when
    ``arclength``); ``predict`` gives the sup-norm of the minimal solution
    at each lambda (NaN past the fold or asymptote) and ``transform`` the
    fields themselves.
    """

    def __init__(self, problem="gelfand", params=None, n=99, dim=1, arclength=False,
                 lambda_max=math.inf, lambda_min=0.0, norm_cap=1e3):
        self.problem = problem
        self.params = params
        self.n = n
        self.dim = dim
        self.arclength = arclength
        self.lambda_max = lambda_max
        self.lambda_min = lambda_min
        self.norm_cap = norm_cap

    def fit(self, X=None, y=None):
        self._build()
        cfg = ContinuationConfig(lambda_max=self.lambda_max, lambda_min=self.lambda_min,
                                 norm_cap=self.norm_cap)
        diagram = trace_minimal_branch(self.problem_, cfg)
        self.lambda_star_ = None
        if diagram.termination == "fold":
            try:
                self.lambda_star_ = estimate_lambda_star(diagram, self.problem_)
            except NoFold:
                pass
            if self.arclength:
                pseudo_arclength_continue(self.problem_, diagram, cfg)
        self.diagram_ = diagram
        self.termination_ = diagram.termination
        return self

    def _minimal(self, lam):
        lams = [p.lam for p in self.diagram_.minimal_prefix()]
        if lam < lams[0] or lam > lams[-1]:
            return None
        return solve_on_branch(self.problem_, self.diagram_, lam, "minimal")

    def transform(self, X):
        check_is_fitted(self, "diagram_")
        lams = check_lambdas(X)
        out = np.full((lams.size, self.grid_.size), np.nan)
        for k, lam in enumerate(lams):
            u = self._minimal(lam)
            if u is not None:
                out[k] = u
        return out

    def predict(self, X):
        U = self.transform(X)
        return np.where(np.isnan(U[:, 0]), np.nan, np.max(np.abs(U), axis=1))


class SecondSolutionFinder(_ProblemMixin, TransformerMixin, BaseEstimator):
    """lambda -> unstable second solution via the translated mountain pass."""

    def __init__(self, problem="gelfand", params=None, n=99, dim=1, m=32, tol=1e-6):
        self.problem = problem
        self.params = params
        self.n = n
        self.dim = dim
        self.m = m
        self.tol = tol

    def fit(self, X=None, y=None):
        self._build()
        return self

    def transform(self, X):
        check_is_fitted(self, "problem_")
        lams = check_lambdas(X)
        out = np.empty((lams.size, self.grid_.size))
        self.gap_ = np.empty(lams.size)
        for k, lam in enumerate(lams):
            s = second_solution(self.problem_, lam, m=self.m, tol=self.tol)
            out[k] = s.u2
            self.gap_[k] = norm_inf(s.u2 - s.minimal)
        return out
