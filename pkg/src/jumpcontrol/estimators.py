"""scikit-learn style wrappers around the IPO and harvest solvers.

``fit`` solves for the free boundary, ``predict`` evaluates the value
function at the rows of ``X`` (one column: the company value) and
``transform`` returns ``(v, v', v'')``. Hyperparameters are the model
parameters, so ``set_params`` plus ``fit`` is a sensitivity sweep step.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .harvest import eval_harvest_derivatives, eval_harvest_value, solve_harvest_threshold
from .ipo import IpoParams, eval_ipo_derivatives, eval_ipo_value, solve_ipo_threshold
from .model import ModelParams


def _column(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature (the company value), got {X.shape[1]} columns")
        X = X[:, 0]
    return X


class _ValueEstimator(TransformerMixin, BaseEstimator):
    def _model(self) -> ModelParams:
        return ModelParams(self.mu, self.sigma, self.lam, self.eta, self.alpha)

    def fit(self, X=None, y=None):
        """Solve for the boundary. ``X`` and ``y`` are ignored."""
        self._solve()
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "solution_")
        return np.asarray(self._value(_column(X)), dtype=float)

    def transform(self, X) -> np.ndarray:
        """Columns ``(v, v', v'')`` for every row of ``X``."""
        check_is_fitted(self, "solution_")
        x = _column(X)
        d1, d2 = self._derivs(x)
        return np.column_stack([self._value(x), d1, d2])


class IPOValueEstimator(_ValueEstimator):
    """Value of the IPO problem with cash-infusion floor ``a`` and multiple ``r``.

    Fitted attributes: ``solution_`` (:class:`IpoSolution`), ``boundary_``,
    ``roots_``.
    """

    def __init__(self, mu=-0.05, sigma=0.25, lam=0.75, eta=1.5, alpha=0.1, r=1.25, a=0.0):
        self.mu = mu
        self.sigma = sigma
        self.lam = lam
        self.eta = eta
        self.alpha = alpha
        self.r = r
        self.a = a

    def _solve(self):
        self.solution_ = solve_ipo_threshold(IpoParams(self._model(), self.r, self.a))
        self.boundary_ = self.solution_.b
        self.roots_ = self.solution_.roots

    def _value(self, x):
        return eval_ipo_value(self.solution_, x)

    def _derivs(self, x):
        return eval_ipo_derivatives(self.solution_, x)


class HarvestValueEstimator(_ValueEstimator):
    """Value of the dividend problem under the optimal barrier (fitted as ``boundary_``)."""

    def __init__(self, mu=-0.05, sigma=0.25, lam=0.75, eta=1.5, alpha=0.1):
        self.mu = mu
        self.sigma = sigma
        self.lam = lam
        self.eta = eta
        self.alpha = alpha

    def _solve(self):
        self.solution_ = solve_harvest_threshold(self._model())
        self.boundary_ = self.solution_.b
        self.roots_ = self.solution_.roots

    def _value(self, x):
        return eval_harvest_value(self.solution_, x)

    def _derivs(self, x):
        return eval_harvest_derivatives(self.solution_, x)
