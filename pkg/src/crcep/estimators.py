"""scikit-learn style wrappers around the covariance-extension solvers and the smoother.

The estimators take covariance lags (not sample matrices) in ``fit``; use
:func:`crcep.simulate.sample_lags` to turn a trajectory into lags first.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .line import solve_line
from .periodic import solve
from .simulate import simulate_periodic
from .smoother import ObservationChannel, SmoothingProblem, smooth
from .solver import SolverConfig
from .vector import solve_vec

__all__ = [
    "check_lags",
    "check_numerator",
    "check_half_period",
    "PeriodicCovarianceExtension",
    "LineCovarianceExtension",
    "VectorCovarianceExtension",
    "PeriodicSmoother",
]


def check_lags(lags, block: bool = False) -> np.ndarray:
    """Validate lags: finite floats, shape ``(n+1,)`` or ``(n+1, m, m)`` with symmetric ``C_0``."""
    arr = np.asarray(lags, dtype=float)
    if block:
        if arr.ndim == 1:
            arr = arr[:, None, None]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"block lags must have shape (n+1, m, m), got {arr.shape}")
        check_array(arr.reshape(arr.shape[0], -1), ensure_min_features=1)
        if not np.allclose(arr[0], arr[0].T):
            raise ValueError("C_0 must be symmetric")
        return arr
    arr = check_array(np.atleast_1d(arr), ensure_2d=False)
    if arr.ndim != 1:
        raise ValueError(f"scalar lags must be one-dimensional, got shape {arr.shape}")
    return arr


def check_numerator(b, n: int) -> np.ndarray:
    """``b`` as a float array of length ``n+1``; ``None`` gives ``(1, 0, .., 0)``."""
    if b is None:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    out = check_array(np.atleast_1d(np.asarray(b, dtype=float)), ensure_2d=False)
    if out.shape != (n + 1,):
        raise ValueError(f"b must have length n+1 = {n + 1}, got {out.shape[0]}")
    return out


def check_half_period(N, n: int) -> int:
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if n >= N:
        raise ValueError(f"n < N required (n = {n}, N = {N})")
    return int(N)


class _SolverParams:
    def _config(self) -> SolverConfig:
        return SolverConfig(delta=self.tol, max_iterations=self.max_iter, damping=self.damping)


class PeriodicCovarianceExtension(_SolverParams, BaseEstimator):
    """Periodic ARMA model matching given scalar lags on Z_2N.

    Parameters
    ----------
    N : int
        Half-period.
    b : array_like, optional
        Monic Schur numerator; defaults to the maximum-entropy choice ``b = 1``.
    tol : float
        Step-length threshold.
    max_iter : int
    damping : bool

    Attributes
    ----------
    a_ : ndarray
        Monic denominator.
    sigma2_ : float
    model_ : PeriodicArmaModel
    report_ : SolveReport
    n_iter_ : int
    """

    def __init__(self, N=32, b=None, tol=1e-10, max_iter=500, damping=True):
        self.N = N
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping

    def fit(self, X, y=None):
        lags = check_lags(X)
        n = lags.shape[0] - 1
        N = check_half_period(self.N, n)
        self.model_, self.report_ = solve(lags, check_numerator(self.b, n), N, self._config())
        self.a_ = self.model_.a
        self.sigma2_ = self.model_.sigma2
        self.n_iter_ = self.report_.iterations
        return self

    def covariances(self, n_lags=None):
        check_is_fitted(self, "model_")
        return self.model_.covariances(n_lags)

    def spectrum(self):
        check_is_fitted(self, "model_")
        return self.model_.spectrum()

    def sample(self, random_state=None):
        """One period of the fitted process."""
        check_is_fitted(self, "model_")
        return simulate_periodic(self.model_, random_state)

    def score(self, X, y=None):
        """Negative largest lag mismatch between the model and ``X``."""
        check_is_fitted(self, "model_")
        lags = check_lags(X)
        return -float(np.abs(self.model_.covariances(lags.shape[0] - 1) - lags).max())


class LineCovarianceExtension(_SolverParams, BaseEstimator):
    """ARMA model on the integer line matching given scalar lags."""

    def __init__(self, b=None, tol=1e-10, max_iter=500, damping=True):
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping

    def fit(self, X, y=None):
        lags = check_lags(X)
        n = lags.shape[0] - 1
        self.model_, self.report_ = solve_line(lags, check_numerator(self.b, n), self._config())
        self.a_ = self.model_.a
        self.sigma2_ = self.model_.sigma2
        self.n_iter_ = self.report_.iterations
        return self

    def covariances(self, n_lags=None):
        check_is_fitted(self, "model_")
        return self.model_.covariances(n_lags)

    def score(self, X, y=None):
        check_is_fitted(self, "model_")
        lags = check_lags(X)
        return -float(np.abs(self.model_.covariances(lags.shape[0] - 1) - lags).max())


class VectorCovarianceExtension(_SolverParams, BaseEstimator):
    """Block periodic ARMA model (scalar numerator) matching block lags.

    Attributes
    ----------
    A_ : ndarray, shape (n+1, m, m)
        Coefficients with ``A_0 = I``.
    D_ : ndarray, shape (m, m)
        Noise covariance.
    """

    def __init__(self, N=32, b=None, tol=1e-10, max_iter=500, damping=True):
        self.N = N
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping

    def fit(self, X, y=None):
        lags = check_lags(X, block=True)
        n = lags.shape[0] - 1
        N = check_half_period(self.N, n)
        self.model_, self.report_ = solve_vec(lags, check_numerator(self.b, n), N, self._config())
        self.A_ = self.model_.A
        self.D_ = self.model_.D
        self.n_iter_ = self.report_.iterations
        return self

    def covariances(self, n_lags=None):
        check_is_fitted(self, "model_")
        return self.model_.covariances(n_lags)

    def sample(self, random_state=None):
        check_is_fitted(self, "model_")
        return simulate_periodic(self.model_, random_state)

    def score(self, X, y=None):
        check_is_fitted(self, "model_")
        lags = check_lags(X, block=True)
        return -float(np.abs(self.model_.covariances(lags.shape[0] - 1) - lags).max())


class PeriodicSmoother(_SolverParams, TransformerMixin, BaseEstimator):
    """Two-sweep smoother with a periodic prior fitted to state lags.

    ``fit`` takes the block lags of the state ``x``; ``transform`` maps one
    period of observations ``y`` (shape ``(2N, p)``) to the estimate of ``x``
    (shape ``(2N, m)``).

    Parameters
    ----------
    C : array_like, shape (p, m)
        Output matrix.
    R : array_like, shape (p, p)
        Measurement noise covariance.
    N, b, tol, max_iter, damping
        As for :class:`VectorCovarianceExtension`.
    """

    def __init__(self, C=None, R=None, N=32, b=None, tol=1e-10, max_iter=500, damping=True):
        self.C = C
        self.R = R
        self.N = N
        self.b = b
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping

    def fit(self, X, y=None):
        if self.C is None or self.R is None:
            raise ValueError("C and R must be given")
        ext = VectorCovarianceExtension(self.N, self.b, self.tol, self.max_iter, self.damping)
        ext.fit(X)
        self.prior_ = ext.model_
        self.report_ = ext.report_
        self.channel_ = ObservationChannel(self.C, self.R)
        if self.channel_.C.shape[1] != self.prior_.m:
            raise ValueError(f"C must have {self.prior_.m} columns")
        return self

    def transform(self, X):
        check_is_fitted(self, "prior_")
        Y = check_array(np.asarray(X, dtype=float).reshape(len(X), -1))
        self.result_ = smooth(SmoothingProblem(self.prior_, self.channel_, Y))
        return self.result_.x_hat
