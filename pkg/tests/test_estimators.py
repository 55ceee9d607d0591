import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from elliptic import BranchContinuation, MonotoneSolver, SecondSolutionFinder
from elliptic.problems import bratu_oracle


def test_get_params_and_clone():
    est = MonotoneSolver(problem="affine", params={"a": 2.0}, n=31)
    assert est.get_params()["params"] == {"a": 2.0}
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est


def test_transform_requires_fit():
    with pytest.raises(NotFittedError):
        MonotoneSolver().transform([1.0])


def test_monotone_solver_rows():
    U = MonotoneSolver(n=99).fit().transform([[0.5], [1.0]])
    assert U.shape == (2, 99)
    assert np.all(U[1] >= U[0])


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        MonotoneSolver().fit().transform([-1.0])


def test_branch_predict_matches_oracle():
    est = BranchContinuation(n=200).fit()
    assert est.termination_ == "fold"
    assert est.lambda_star_ == pytest.approx(bratu_oracle().lambda_star, abs=5e-3)
    sup = est.predict([1.0, 2.0, 5.0])
    ref = bratu_oracle()
    assert sup[0] == pytest.approx(ref.supnorms(1.0)[0], abs=1e-3)
    assert sup[1] == pytest.approx(ref.supnorms(2.0)[0], abs=1e-3)
    assert np.isnan(sup[2])


def test_second_solution_finder_in_pipeline():
    pipe = make_pipeline(SecondSolutionFinder(n=63))
    U = pipe.fit(None).transform([2.0])
    finder = pipe[-1]
    assert U.shape == (1, 63) and finder.gap_[0] >= 0.1
