"""Scikit-learn style estimator wrapping the Krylov solvers.

Fitting approximates the top right singular subspace of X (by running
the solver on the Gram operator of X^T), so transform(X) projects rows
onto the learned components exactly like TruncatedSVD does.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .operators import DenseGram
from .solvers import SolverConfig, block_krylov, simultaneous_iteration

__all__ = ["KrylovLowRank"]


class KrylovLowRank(BaseEstimator, TransformerMixin):
    """Low-rank projection fitted by block Krylov or simultaneous iteration.

    Parameters
    ----------
    n_components : int
        Target rank k.
    block_size : int
        Vectors iterated together; 1 is the single-vector method.
    n_iter : int
        Krylov iterations t; the fit costs (t+1) * block_size products
        with X'X.
    method : {'krylov', 'simultaneous'}
        Subspace construction; simultaneous iteration requires
        block_size >= n_components.
    ortho : {'full', 'lanczos'}
        Full reorthogonalization or the local two-block pattern.
    random_state : int
        Seed for the Gaussian starting block.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
    singular_values_ : ndarray, estimates of the top singular values
    matvecs_ : int, Gram applications spent during fit
    """

    def __init__(self, n_components=2, block_size=1, n_iter=30, method="krylov",
                 ortho="full", random_state=0):
        self.n_components = n_components
        self.block_size = block_size
        self.n_iter = n_iter
        self.method = method
        self.ortho = ortho
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        cfg = SolverConfig(
            target_rank=self.n_components,
            iterations=self.n_iter,
            block_size=self.block_size,
            ortho=self.ortho,
            seed=0 if self.random_state is None else int(self.random_state),
        )
        op = DenseGram(X.T)
        if self.method == "krylov":
            result = block_krylov(op, cfg)
        elif self.method == "simultaneous":
            result = simultaneous_iteration(op, cfg)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.result_ = result
        self.components_ = result.Q.columns.T
        self.singular_values_ = np.sqrt(result.ritz_values)
        self.matvecs_ = result.matvecs
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.components_.T

    def inverse_transform(self, X_reduced):
        check_is_fitted(self, "components_")
        X_reduced = check_array(X_reduced, dtype=np.float64)
        return X_reduced @ self.components_
