"""Estimator-style wrappers around the forward solver and the order inversions."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from mlorder.exceptions import DomainError
from mlorder.inverse import (
    DEFAULT_EPSILON,
    PointObservation,
    PskhuProblem,
    Status,
    solve_point,
    solve_pskhu,
)
from mlorder.spectral import (
    DerivativeKind,
    InitialField,
    forward_eval,
    solve_forward,
)


class SubdiffusionForward(BaseEstimator, RegressorMixin):
    """Spectral solution evaluated at rows ``(x..., t)``.

    ``fit`` takes no data; it builds the truncated solution from the domain,
    the coefficients and ``rho``. ``predict`` returns ``u(x, t)`` per row.
    """

    def __init__(self, domain=None, coefficients=None, rho=1.0, kind="caputo",
                 n_modes=None):
        self.domain = domain
        self.coefficients = coefficients
        self.rho = rho
        self.kind = kind
        self.n_modes = n_modes

    def fit(self, X=None, y=None):
        if self.domain is None or self.coefficients is None:
            raise DomainError("domain and coefficients are required")
        field = InitialField.given(np.asarray(self.coefficients, dtype=float))
        self.solution_ = solve_forward(self.domain, field, float(self.rho),
                                       DerivativeKind(self.kind), self.n_modes)
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X, ensure_min_features=2)
        dim = self.domain.dimension
        if X.shape[1] != dim + 1:
            raise DomainError(f"rows must be (x..., t) with {dim + 1} columns, got {X.shape[1]}")
        return np.array([forward_eval(self.solution_, tuple(row[:dim]), float(row[dim]))
                         for row in X])


class OrderEstimator(BaseEstimator):
    """Order from one point observation ``u(x0, t0) = d0``.

    ``X`` holds one row ``(x0..., t0)`` and ``y`` the matching ``d0``.
    """

    def __init__(self, domain=None, coefficients=None, rho0=0.5, tol=1e-12,
                 epsilon=DEFAULT_EPSILON):
        self.domain = domain
        self.coefficients = coefficients
        self.rho0 = rho0
        self.tol = tol
        self.epsilon = epsilon

    def fit(self, X, y):
        X = check_array(X, ensure_min_features=2)
        y = np.ravel(np.asarray(y, dtype=float))
        if X.shape[0] != 1 or y.shape != (1,):
            raise DomainError("expected a single observation")
        dim = self.domain.dimension
        if X.shape[1] != dim + 1:
            raise DomainError(f"rows must be (x0..., t0) with {dim + 1} columns")
        x0 = tuple(X[0, :dim])
        obs = PointObservation(x0 if dim > 1 else x0[0], float(X[0, dim]), float(y[0]))
        field = InitialField.given(np.asarray(self.coefficients, dtype=float))
        self.result_ = solve_point(obs, self.domain, field, float(self.rho0), self.tol,
                                   self.epsilon)
        self.rho_ = self.result_.rho_hat
        self.status_ = self.result_.status
        return self

    @property
    def is_unique_(self) -> bool:
        check_is_fitted(self, "result_")
        return self.status_ is Status.Unique


class PskhuOrderEstimator(BaseEstimator):
    """Order from ``u(x0) = u0`` for the equation with a fractional derivative in ``x``.

    ``X`` holds one row ``(phi, lambda, x0)`` and ``y`` the value ``u0``.
    """

    def __init__(self, rho0=0.1, tol=1e-12):
        self.rho0 = rho0
        self.tol = tol

    def fit(self, X, y):
        X = check_array(X)
        y = np.ravel(np.asarray(y, dtype=float))
        if X.shape != (1, 3) or y.shape != (1,):
            raise DomainError("expected one row (phi, lambda, x0) and one value u0")
        phi, lam, x0 = (float(v) for v in X[0])
        self.result_ = solve_pskhu(PskhuProblem(phi, lam, x0, float(y[0])), float(self.rho0),
                                   self.tol)
        self.rho_ = self.result_.rho_hat
        self.status_ = self.result_.status
        return self


__all__ = ["OrderEstimator", "PskhuOrderEstimator", "SubdiffusionForward"]
