"""Scalar circulant rational covariance extension.

Given lags ``c_0..c_n`` and a monic Schur numerator ``b``, find a Schur
denominator ``a`` and a noise variance ``sigma2`` such that the periodic
ARMA process ``sum a_k y(t-k) = sum b_k w(t-k)`` on Z_2N has covariance
lags ``c_0..c_n``. The unknown ``a`` is computed by the scaled fixed-point
iteration ``a <- sigma2(a) T_n^{-1} T_gamma(a) b`` followed by a spectral
factorization that keeps every iterate Schur.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .dft import DiscreteCircle, idft, periodic_position, polynomial_on_circle
from .exceptions import (
    ConvergenceError,
    DegenerateScalingError,
    DimensionError,
    FactorizationError,
    InfeasibleAtNError,
    SingularSymbolError,
)
from .solver import SolveReport, SolverConfig, run_descent
from .spectral_factor import (
    coefficient_jacobian,
    coefficient_match_check,
    polynomial_roots,
    schur_factor,
)
from .toeplitz import CovarianceData, levinson, toeplitz_pd

__all__ = [
    "PeriodicArmaModel",
    "gamma_of",
    "toeplitz_gamma",
    "sigma_sq",
    "model_lags",
    "objective",
    "profile_objective",
    "gradient",
    "gradient_moment_form",
    "raw_step",
    "iterate_step",
    "solve",
    "MomentCheck",
    "jury_matrix",
    "verify_moments",
    "hessian_residual",
    "dual_hessian",
]

logger = logging.getLogger(__name__)

NODE_TOL = 1e-12


@dataclass(frozen=True)
class PeriodicArmaModel:
    """Unilateral periodic ARMA model ``a(z) y = b(z) w`` on Z_2N, ``var(w) = sigma2``."""

    a: np.ndarray
    b: np.ndarray
    sigma2: float
    N: int

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise DimensionError(f"a and b must have the same degree, got {a.shape} and {b.shape}")
        if a.shape[0] - 1 >= self.N:
            raise DimensionError(f"n < N required (n = {a.shape[0] - 1}, N = {self.N})")
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

    @property
    def unit_variance_a(self) -> np.ndarray:
        """Denominator rescaled so that the noise variance is one.

        This representative minimizes the dual objective, so gradients and
        Hessian residuals are evaluated there.
        """
        return self.a / np.sqrt(self.sigma2)

    def spectrum(self) -> np.ndarray:
        """``sigma2 |b(zeta)|^2 / |a(zeta)|^2`` at the 2N nodes (symmetric layout)."""
        return self.sigma2 * np.abs(polynomial_on_circle(self.b, self.N)) ** 2 / np.abs(
            _a_on_circle(self.a, self.N)) ** 2

    def covariances(self, n_lags: int | None = None) -> np.ndarray:
        """Lags ``c_0..c_{n_lags}`` of the periodic process (default ``n``)."""
        n_lags = self.n if n_lags is None else n_lags
        g = idft(self.spectrum(), self.N, real=True)
        return g[periodic_position(np.arange(n_lags + 1), self.N)]

    def normalized(self) -> "PeriodicArmaModel":
        """Equivalent model with ``a_0 = 1``."""
        a0 = self.a[0]
        return PeriodicArmaModel(self.a / a0, self.b, self.sigma2 / a0 ** 2, self.N)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "sigma2": self.sigma2, "N": self.N}


def _a_on_circle(a, N) -> np.ndarray:
    vals = polynomial_on_circle(a, N)
    mags = np.abs(vals)
    scale = np.abs(np.asarray(a)).sum()
    bad = np.flatnonzero(mags <= NODE_TOL * max(scale, np.finfo(float).tiny))
    if bad.size:
        j = int(DiscreteCircle(N).indices[bad[0]])
        raise SingularSymbolError(f"a(zeta) vanishes at node j = {j}", node=j)
    return vals


def _lags_of(c) -> np.ndarray:
    d = c if isinstance(c, CovarianceData) else CovarianceData(c)
    if d.is_block:
        raise DimensionError("scalar solver needs scalar lags")
    return d.lags


def gamma_of(a, b, N: int) -> np.ndarray:
    """Periodic impulse response of ``b/a``: inverse DFT of ``b(zeta)/a(zeta)``.

    Returns the real sequence ``gamma_{-N+1..N}`` in symmetric layout.
    """
    return idft(polynomial_on_circle(b, N) / _a_on_circle(a, N), N, real=True)


def toeplitz_gamma(gamma, n: int) -> np.ndarray:
    """``(n+1) x (n+1)`` matrix with entry ``(j, k)`` equal to ``gamma_{k-j}``."""
    gamma = np.asarray(gamma)
    N = gamma.shape[0] // 2
    j, k = np.indices((n + 1, n + 1))
    return gamma[periodic_position(k - j, N)]


def sigma_sq(a, b, gamma, c) -> float:
    """Noise variance ``sum c_k a_k / sum gamma_k b_k`` (``gamma_k``, ``k >= 0``)."""
    a, b, c = (np.asarray(x, dtype=float) for x in (a, b, c))
    n = a.shape[0] - 1
    N = np.asarray(gamma).shape[0] // 2
    g = np.asarray(gamma)[periodic_position(np.arange(n + 1), N)]
    den = g @ b
    num = c[: n + 1] @ a
    if abs(den) <= 1e-14 * max(np.abs(g).max(), 1e-300) * np.abs(b).sum():
        raise DegenerateScalingError(f"sum gamma_k b_k = {den:.3e} is numerically zero")
    return float(num / den)


def model_lags(a, b, N: int, sigma2: float = 1.0, n_lags: int | None = None) -> np.ndarray:
    """Lags of ``sigma2 |b|^2/|a|^2`` on the discrete circle."""
    a = np.asarray(a, dtype=float)
    n_lags = a.shape[0] - 1 if n_lags is None else n_lags
    phi = sigma2 * np.abs(polynomial_on_circle(b, N)) ** 2 / np.abs(_a_on_circle(a, N)) ** 2
    return idft(phi, N, real=True)[periodic_position(np.arange(n_lags + 1), N)]


def _log_term(a, b, N) -> float:
    P = np.abs(polynomial_on_circle(b, N)) ** 2
    return float(np.mean(P * np.log(np.abs(_a_on_circle(a, N)) ** 2)))


def objective(a, b, c, N: int) -> float:
    """``a^T T_n a - int |b|^2 log |a|^2 dnu`` with ``dnu`` the uniform node measure."""
    a = np.asarray(a, dtype=float)
    T = CovarianceData(_lags_of(c)).toeplitz()
    return float(a @ T @ a) - _log_term(a, b, N)


def profile_objective(a, b, c, N: int) -> float:
    """``min_t objective(t a)``; invariant under rescaling of ``a``.

    The scaled iteration moves freely along rays ``t a``, so descent is
    monitored on this scale-free profile.
    """
    a = np.asarray(a, dtype=float)
    T = CovarianceData(_lags_of(c)).toeplitz()
    p0 = float(np.asarray(b, dtype=float) @ np.asarray(b, dtype=float))
    s = float(a @ T @ a)
    return p0 - p0 * np.log(p0 / s) - _log_term(a, b, N)


def gradient(a, b, c, N: int) -> np.ndarray:
    """``2 (T_n a - T_gamma(a) b)``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] - 1
    T = CovarianceData(_lags_of(c)).toeplitz()
    Tg = toeplitz_gamma(gamma_of(a, b, N), n)
    return 2.0 * (T @ a - Tg @ np.asarray(b, dtype=float))


def gradient_moment_form(a, b, c, N: int) -> np.ndarray:
    """``2 [T_n - T_n(a)] a`` where ``T_n(a)`` holds the lags of ``|b|^2/|a|^2``."""
    a = np.asarray(a, dtype=float)
    lags = _lags_of(c)
    diff = CovarianceData(lags).toeplitz() - CovarianceData(model_lags(a, b, N)).toeplitz()
    return 2.0 * diff @ a


def raw_step(a, b, c, N: int, sigma2: float | None = None) -> np.ndarray:
    """Unprojected iterate ``sigma2 T_n^{-1} T_gamma(a) b``.

    ``sigma2=None`` uses the variance rule :func:`sigma_sq`; ``sigma2=1``
    gives the plain quasi-Newton step ``a - (1/2) T_n^{-1} grad J(a)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lags = _lags_of(c)
    n = a.shape[0] - 1
    gamma = gamma_of(a, b, N)
    if sigma2 is None:
        sigma2 = sigma_sq(a, b, gamma, lags)
    T = CovarianceData(lags).toeplitz()
    return sigma2 * linalg.solve(T, toeplitz_gamma(gamma, n) @ b, assume_a="pos")


def _project(a_raw: np.ndarray, N: int) -> np.ndarray:
    return schur_factor(coefficient_match_check(a_raw), N=N).coeffs


def iterate_step(a, b, c, N: int, sigma2: float | None = None) -> np.ndarray:
    """One raw step followed by projection onto Schur polynomials with ``a_0 > 0``."""
    return _project(raw_step(a, b, c, N, sigma2), N)


def _check_inputs(lags, b, N):
    n = lags.shape[0] - 1
    if b.shape[0] != n + 1:
        raise DimensionError(f"b has degree {b.shape[0] - 1}, data has n = {n}")
    if n >= N:
        raise DimensionError(f"n < N required (n = {n}, N = {N})")
    if b[0] != 1.0:
        raise ValueError(f"b must be monic (b_0 = 1), got b_0 = {b[0]}")
    if n and np.any(np.abs(polynomial_roots(b)) >= 1.0):
        raise ValueError("b must be a Schur polynomial")
    check = toeplitz_pd(lags)
    if not check.positive_definite:
        from .exceptions import NotPositiveDefiniteError
        raise NotPositiveDefiniteError(
            f"Toeplitz matrix of the data is not PD (min eigenvalue {check.min_eigenvalue:.3e})")


def solve(c, b, N: int, config: SolverConfig | None = None, a_init=None):
    """Quasi-Newton descent with spectral factorization.

    Parameters
    ----------
    c : array_like
        Lags ``c_0..c_n`` with positive definite Toeplitz matrix.
    b : array_like
        Monic Schur numerator ``b_0..b_n``.
    N : int
        Half-period, ``n < N``.
    config : SolverConfig, optional
    a_init : array_like, optional
        Starting denominator; defaults to the Levinson (maximum-entropy) polynomial.

    Returns
    -------
    model : PeriodicArmaModel
        Normalized to ``a_0 = 1``.
    report : SolveReport

    Raises
    ------
    ConvergenceError
        Iteration budget exhausted (``err.report`` holds the report).
    InfeasibleAtNError
        The iterates approach a factor with zeros on the unit circle.
    """
    config = config or SolverConfig()
    lags = _lags_of(c)
    b = np.atleast_1d(np.asarray(b, dtype=float))
    _check_inputs(lags, b, N)
    n = lags.shape[0] - 1

    if n == 0:
        model = PeriodicArmaModel([1.0], [1.0], lags[0], N)
        return model, SolveReport("converged", 0, 0.0, 0.0, np.zeros(1), [lags[0]], [], 0)

    a = levinson(lags)[0] if a_init is None else np.asarray(a_init, dtype=float)

    def step(x):
        s2 = sigma_sq(x, b, gamma_of(x, b, N), lags)
        return raw_step(x, b, lags, N, s2), s2

    def unit_gradient(x):
        s2 = sigma_sq(x, b, gamma_of(x, b, N), lags)
        return float(np.linalg.norm(gradient(x / np.sqrt(s2), b, lags, N)))

    try:
        trace = run_descent(a, step, lambda x: _project(x, N),
                            lambda x: profile_objective(x, b, lags, N), unit_gradient,
                            config, normalize=lambda x: x / x[0])
    except FactorizationError as exc:
        report = SolveReport("infeasible", 0, np.nan, np.nan, np.full(n + 1, np.nan),
                             message=str(exc))
        raise InfeasibleAtNError(
            f"problem appears infeasible at N = {N}: {exc}; try N = {2 * N}", N=N, report=report
        ) from exc

    a = trace.x
    model = PeriodicArmaModel(a, b, sigma_sq(a, b, gamma_of(a, b, N), lags), N).normalized()
    report = _report(trace, model.covariances() - lags)
    logger.info("periodic solve: %s after %d iterations, |residual| = %.2e",
                report.status, report.iterations, report.max_moment_residual)
    if not report.converged:
        raise ConvergenceError(
            f"no convergence in {config.max_iterations} iterations (last step "
            f"{trace.step_norm:.2e}, gradient {trace.gradient_norm:.2e})", report=report)
    return model, report


def _report(trace, residual) -> SolveReport:
    return SolveReport(trace.status, trace.iterations, trace.step_norm, trace.gradient_norm,
                       residual, trace.sigma2_trajectory, trace.objective_trajectory,
                       trace.backtracks)


class MomentCheck(NamedTuple):
    residual: np.ndarray
    spectral_residual: np.ndarray
    jury_det: float
    jury_product: float  # a_0^(n+1) prod_{i<=j} (1 - r_i r_j); equals jury_det


def jury_matrix(a) -> np.ndarray:
    """Matrix ``M(a)`` with ``M(a) c = T_n a`` (Hankel part plus shifted lower Toeplitz part)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] - 1
    i, j = np.indices((n + 1, n + 1))
    hankel = np.where(i + j <= n, a[np.minimum(i + j, n)], 0.0)
    lower = np.where((j >= 1) & (j <= i), a[np.clip(i - j, 0, n)], 0.0)
    return hankel + lower


def verify_moments(model: PeriodicArmaModel, c) -> MomentCheck:
    """Moments implied by ``model`` minus the data ``c``.

    ``residual`` solves ``M(a) c_hat = sigma2 T_gamma(a) b`` for ``c_hat``;
    ``spectral_residual`` uses the inverse DFT of the model spectrum.

    Raises
    ------
    SingularSymbolError
        If the Jury matrix is singular (``a`` has reciprocal root pairs).
    """
    lags = _lags_of(c)
    a, b, N = model.a, model.b, model.N
    M = jury_matrix(a)
    det = float(np.linalg.det(M))
    roots = polynomial_roots(a)
    iu = np.triu_indices(roots.size)
    pairs = 1.0 - np.outer(roots, roots)[iu]
    prod = float(np.real(a[0] ** (model.n + 1) * np.prod(pairs)))
    if abs(prod) < 1e-14 * abs(a[0]) ** (model.n + 1):
        raise SingularSymbolError("Jury matrix is singular; a is not Schur")
    rhs = model.sigma2 * toeplitz_gamma(gamma_of(a, b, N), model.n) @ b
    c_hat = np.linalg.solve(M, rhs)
    return MomentCheck(c_hat - lags, model.covariances() - lags, det, prod)


def hessian_residual(a, b, c, N: int) -> np.ndarray:
    """Second-order chain-rule term of the objective in ``a``.

    ``hess J(a) = Jac^T H_Q Jac + R`` where ``Jac`` is the Jacobian of the
    coefficient map ``a -> q`` and ``H_Q`` is :func:`dual_hessian`. With
    ``c~`` the lags of ``|b|^2/|a|^2``, ``R = 2 (T_n - T_n(c~))``; it
    vanishes exactly where the moments match.
    """
    lags = _lags_of(c)
    diff = CovarianceData(lags).toeplitz() - CovarianceData(model_lags(a, b, N)).toeplitz()
    return 2.0 * diff


def dual_hessian(a, b, N: int) -> np.ndarray:
    """Hessian of ``<c, q> - int P log Q dnu`` in the coordinates ``q_0..q_n`` at ``Q = |a|^2``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] - 1
    nodes = DiscreteCircle(N).nodes
    P = np.abs(polynomial_on_circle(b, N)) ** 2
    Q = np.abs(_a_on_circle(a, N)) ** 2
    k = np.arange(n + 1)
    w = np.where(k == 0, 1.0, 2.0)[None, :] * np.cos(np.outer(np.angle(nodes), k))
    return (w * (P / Q ** 2)[:, None]).T @ w / (2 * N)


# re-exported for callers that assemble Jac^T H_Q Jac
coefficient_jacobian = coefficient_jacobian
