"""Rational covariance extension on the integer line.

The classical (non-periodic) counterpart of :mod:`crcep.periodic`: the
process ``a(z) y = b(z) w`` lives on Z, the impulse response of ``b/a`` is
causal, and integrals over the unit circle replace averages over the 2N
nodes. Those integrals are evaluated on a uniform grid that is refined until
the result stops changing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import (
    ConvergenceError,
    DegenerateScalingError,
    DimensionError,
    FactorizationError,
    NotPositiveDefiniteError,
)
from .periodic import model_lags
from .solver import SolveReport, SolverConfig, run_descent
from .spectral_factor import coefficient_match_check, polynomial_roots, schur_factor
from .toeplitz import CovarianceData, levinson, toeplitz_pd

__all__ = [
    "LineArmaModel",
    "impulse_head",
    "hankel_b",
    "sigma_sq_line",
    "iterate_line",
    "line_lags",
    "line_objective",
    "line_profile_objective",
    "line_gradient",
    "solve_line",
]

logger = logging.getLogger(__name__)

GRID_POINTS = 2 ** 13
GRID_TOL = 1e-10
MAX_GRID_POINTS = 2 ** 20
B_N_TOL = 1e-8


def line_lags(a, b, sigma2: float = 1.0, n_lags: int | None = None,
              points: int = GRID_POINTS, tol: float = GRID_TOL) -> np.ndarray:
    """Lags of ``sigma2 |b|^2/|a|^2`` on the integer line.

    A ``points``-point uniform rule is exact up to aliasing of lags
    ``k + j*points``; the grid is doubled until successive answers agree to
    ``tol``.
    """
    a = np.asarray(a, dtype=float)
    n_lags = a.shape[0] - 1 if n_lags is None else n_lags
    prev = model_lags(a, b, points // 2, sigma2, n_lags)
    while points < MAX_GRID_POINTS:
        points *= 2
        cur = model_lags(a, b, points // 2, sigma2, n_lags)
        if np.abs(cur - prev).max() < tol:
            return cur
        prev = cur
    logger.warning("line lags not settled at %d grid points", points)
    return prev


def _grid_mean(f_values: np.ndarray) -> float:
    return float(np.mean(f_values))


def _log_term(a, b, points: int = GRID_POINTS, tol: float = GRID_TOL) -> float:
    """``int |b|^2 log |a|^2 dtheta / 2pi`` by the same grid refinement as :func:`line_lags`."""
    def rule(M):
        z = np.exp(2j * np.pi * np.arange(M) / M)
        P = np.abs(np.polyval(np.asarray(b, dtype=float)[::-1], 1 / z)) ** 2
        A = np.abs(np.polyval(np.asarray(a, dtype=float)[::-1], 1 / z)) ** 2
        return _grid_mean(P * np.log(A))

    prev = rule(points)
    while points < MAX_GRID_POINTS:
        points *= 2
        cur = rule(points)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class LineArmaModel:
    """ARMA model ``a(z) y = b(z) w`` on the integer line, ``var(w) = sigma2``."""

    a: np.ndarray
    b: np.ndarray
    sigma2: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise DimensionError(f"a and b must have the same degree, got {a.shape} and {b.shape}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if b[0] != 1.0:
            raise ValueError(f"b must be monic (b_0 = 1), got b_0 = {b[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n(self) -> int:
        return self.a.shape[0] - 1

    def covariances(self, n_lags: int | None = None) -> np.ndarray:
        return line_lags(self.a, self.b, self.sigma2, n_lags)

    def impulse_response(self, length: int) -> np.ndarray:
        """First ``length`` Markov parameters of ``b/a``."""
        from scipy.signal import lfilter
        x = np.zeros(length)
        x[0] = 1.0
        return lfilter(self.b, self.a, x)

    def normalized(self) -> "LineArmaModel":
        a0 = self.a[0]
        return LineArmaModel(self.a / a0, self.b, self.sigma2 / a0 ** 2)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "sigma2": self.sigma2}


def impulse_head(a, b) -> np.ndarray:
    """``gamma_0..gamma_n`` solving ``T(a) gamma = b`` with ``T(a)`` lower triangular Toeplitz.

    Raises
    ------
    ZeroDivisionError
        If ``a_0 = 0``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a[0] == 0:
        raise ZeroDivisionError("a_0 = 0: T(a) is singular")
    T = linalg.toeplitz(a, np.zeros_like(a))
    return linalg.solve_triangular(T, b, lower=True)


def hankel_b(b) -> np.ndarray:
    """Upper-left triangular Hankel matrix with entry ``(i, j)`` equal to ``b_{i+j}``."""
    b = np.asarray(b, dtype=float)
    return linalg.hankel(b)


def sigma_sq_line(a, b, c, strict: bool = True, method: str = "auto") -> float:
    """Noise variance consistent with the last moment equation.

    With ``|b_n| > 1e-8`` this is ``(a_0/b_n) sum_k a_k c_{n-k}``. Otherwise
    the full system ``T_n a = sigma2 H_b gamma(a)`` is solved for ``sigma2``
    in the least-squares sense. Both agree at a fixed point of the iteration.

    Parameters
    ----------
    method : {"auto", "lstsq"}
        ``"lstsq"`` always uses the least-squares value. Away from a fixed
        point the last-row value can vanish (it is exactly zero at the
        maximum-entropy polynomial), so the solver uses this option.
    strict : bool
        Raise :class:`DegenerateScalingError` when the value is not positive;
        with ``strict=False`` the value is returned as computed.
    """
    a, b, c = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (a, b, c))
    n = a.shape[0] - 1
    if method not in ("auto", "lstsq"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and abs(b[n]) > B_N_TOL:
        s2 = float(a[0] / b[n] * (a @ c[n::-1]))
    else:
        v = hankel_b(b) @ impulse_head(a, b)
        u = CovarianceData(c).toeplitz() @ a
        s2 = float(v @ u / (v @ v))
    if strict and not s2 > 0:
        raise DegenerateScalingError(
            f"noise variance {s2:.3e} is not positive; (a, b, c) are inconsistent")
    return s2


def iterate_line(a, b, c, sigma2: float | None = None) -> np.ndarray:
    """Raw step ``sigma2 T_n^{-1} H_b T(a)^{-1} b`` (no projection)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if sigma2 is None:
        sigma2 = sigma_sq_line(a, b, c)
    T = CovarianceData(c).toeplitz()
    return sigma2 * linalg.solve(T, hankel_b(b) @ impulse_head(a, b), assume_a="pos")


def line_objective(a, b, c) -> float:
    """``a^T T_n a - int |b|^2 log |a|^2 dtheta/2pi``."""
    a = np.asarray(a, dtype=float)
    return float(a @ CovarianceData(c).toeplitz() @ a) - _log_term(a, b)


def line_profile_objective(a, b, c) -> float:
    """Minimum of :func:`line_objective` along the ray through ``a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p0 = float(b @ b)
    s = float(a @ CovarianceData(c).toeplitz() @ a)
    return p0 - p0 * np.log(p0 / s) - _log_term(a, b)


def line_gradient(a, b, c) -> np.ndarray:
    """``2 (T_n a - H_b gamma(a))`` for Schur ``a``."""
    a = np.asarray(a, dtype=float)
    return 2.0 * (CovarianceData(c).toeplitz() @ a - hankel_b(b) @ impulse_head(a, b))


def solve_line(c, b, config: SolverConfig | None = None, a_init=None):
    """Scaled fixed-point iteration with projection and backtracking.

    Returns
    -------
    model : LineArmaModel
        Normalized to ``a_0 = 1``.
    report : SolveReport
        ``moment_residual`` compares grid-quadrature lags with ``c``.
    """
    config = config or SolverConfig()
    lags = CovarianceData(c).lags
    if lags.ndim != 1:
        raise DimensionError("line solver needs scalar lags")
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = lags.shape[0] - 1
    if b.shape[0] != n + 1:
        raise DimensionError(f"b has degree {b.shape[0] - 1}, data has n = {n}")
    if b[0] != 1.0:
        raise ValueError(f"b must be monic (b_0 = 1), got b_0 = {b[0]}")
    if n and np.any(np.abs(polynomial_roots(b)) >= 1.0):
        raise ValueError("b must be a Schur polynomial")
    check = toeplitz_pd(lags)
    if not check.positive_definite:
        raise NotPositiveDefiniteError(
            f"Toeplitz matrix of the data is not PD (min eigenvalue {check.min_eigenvalue:.3e})")

    if n == 0:
        return LineArmaModel([1.0], [1.0], lags[0]), SolveReport(
            "converged", 0, 0.0, 0.0, np.zeros(1), [lags[0]], [], 0)

    a = levinson(lags)[0] if a_init is None else np.asarray(a_init, dtype=float)

    def step(x):
        s2 = sigma_sq_line(x, b, lags, method="lstsq")
        return iterate_line(x, b, lags, s2), s2

    def project(x):
        return schur_factor(coefficient_match_check(x)).coeffs

    def unit_gradient(x):
        s2 = sigma_sq_line(x, b, lags, method="lstsq")
        return float(np.linalg.norm(line_gradient(x / np.sqrt(s2), b, lags)))

    try:
        trace = run_descent(a, step, project, lambda x: line_profile_objective(x, b, lags),
                            unit_gradient, config, normalize=lambda x: x / x[0],
                            stagnation_window=50)
    except FactorizationError as exc:
        report = SolveReport("infeasible", 0, np.nan, np.nan, np.full(n + 1, np.nan),
                             message=str(exc))
        raise ConvergenceError(f"projection failed: {exc}", report=report) from exc

    a = trace.x
    model = LineArmaModel(a, b, sigma_sq_line(a, b, lags, method="lstsq")).normalized()
    report = SolveReport(trace.status, trace.iterations, trace.step_norm, trace.gradient_norm,
                         model.covariances() - lags, trace.sigma2_trajectory,
                         trace.objective_trajectory, trace.backtracks)
    logger.info("line solve: %s after %d iterations", report.status, report.iterations)
    if not report.converged:
        raise ConvergenceError(
            f"line iteration {report.status} after {report.iterations} iterations "
            f"(last step {trace.step_norm:.2e})", report=report)
    return model, report
