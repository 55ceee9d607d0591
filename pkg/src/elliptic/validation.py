"""Input checks shared by the estimators and the CLI."""
import numpy as np
from sklearn.utils import check_array


def check_lambdas(X) -> np.ndarray:
    """Accept a scalar, a 1-D sequence or an (n_samples, 1) array of lambdas."""
    if np.isscalar(X):
        X = [X]
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = check_array(X, ensure_2d=True)
    if X.shape[1] != 1:
        raise ValueError(f"expected one lambda per row, got {X.shape[1]} columns")
    lams = X[:, 0]
    if np.any(lams < 0):
        raise ValueError("lambda must be nonnegative")
    return lams


def check_count(name, value, minimum):
    errors = []
    if int(value) != value or value < minimum:
        errors.append(f"{name}: must be an integer >= {minimum}, got {value}")
    return errors


def check_positive(name, value):
    if not (value > 0 and np.isfinite(value)):
        return [f"{name}: must be a positive finite number, got {value}"]
    return []
