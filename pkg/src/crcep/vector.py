"""Block (vector) circulant covariance extension with a scalar numerator.

The model is ``sum_k A_k y(t-k) = sum_k b_k w(t-k)`` on Z_2N with
``E[w w^T] = D``. Given block lags ``C_0..C_n`` the coefficients solve the
matrix fixed point ``A T_n = D B T_Gamma(A)``, where ``B = [b_0 I .. b_n I]``
and ``Gamma`` is the periodic impulse response of ``A^{-1} b``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dft import DiscreteCircle, idft, periodic_position, polynomial_on_circle
from .exceptions import (
    ConvergenceError,
    DegenerateScalingError,
    DimensionError,
    FactorizationError,
    InfeasibleAtNError,
    NotPositiveDefiniteError,
    SingularSymbolError,
)
from .solver import SolveReport, SolverConfig, run_descent
from .spectral_factor import _ql, coefficient_match_check, is_schur, matrix_schur_factor, polynomial_roots
from .toeplitz import CovarianceData, levinson_whittle, toeplitz_pd

__all__ = [
    "VectorPeriodicArmaModel",
    "gamma_blocks",
    "toeplitz_Gamma",
    "scaling_D",
    "raw_step_vec",
    "iterate_vec",
    "fixed_point_residual",
    "objective_vec",
    "profile_objective_vec",
    "block_lags",
    "solve_vec",
]

logger = logging.getLogger(__name__)

ASYMMETRY_WARN = 1e-6


@dataclass(frozen=True)
class VectorPeriodicArmaModel:
    """Block periodic ARMA model with scalar numerator ``b`` and noise covariance ``D``."""

    A: np.ndarray
    b: np.ndarray
    D: np.ndarray
    N: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise DimensionError(f"A must have shape (n+1, m, m), got {A.shape}")
        if b.shape[0] != A.shape[0]:
            raise DimensionError("A and b must have the same degree")
        if D.shape != A.shape[1:]:
            raise DimensionError(f"D must be {A.shape[1:]}, got {D.shape}")
        if A.shape[0] - 1 >= self.N:
            raise DimensionError("n < N required")
        if b[0] != 1.0:
            raise ValueError(f"b must be monic (b_0 = 1), got b_0 = {b[0]}")
        if not np.allclose(D, D.T, rtol=1e-10, atol=0.0) or np.linalg.eigvalsh(D).min() <= 0:
            raise ValueError("D must be symmetric positive definite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.A.shape[0] - 1

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def spectrum(self) -> np.ndarray:
        """``A(zeta)^{-1} D A(zeta)^{-*} |b(zeta)|^2`` at every node, shape ``(2N, m, m)``."""
        Az = _A_on_circle(self.A, self.N)
        H = np.linalg.solve(Az, np.broadcast_to(self.D, Az.shape).astype(complex))
        P = np.abs(polynomial_on_circle(self.b, self.N)) ** 2
        Phi = np.linalg.solve(Az.conj(), np.swapaxes(H, -1, -2)).swapaxes(-1, -2) * P[:, None, None]
        return 0.5 * (Phi + np.swapaxes(Phi.conj(), -1, -2))

    def covariances(self, n_lags: int | None = None) -> np.ndarray:
        """Block lags ``C_k = E[y(t+k) y(t)^T]``, ``k = 0..n_lags``."""
        n_lags = self.n if n_lags is None else n_lags
        G = idft(self.spectrum(), self.N, real=True)
        return G[periodic_position(np.arange(n_lags + 1), self.N)]

    def normalized(self) -> "VectorPeriodicArmaModel":
        """Equivalent model with ``A_0 = I`` (``D`` becomes ``A_0^{-1} D A_0^{-T}``)."""
        A0i = np.linalg.inv(self.A[0])
        A = np.einsum("ab,kbc->kac", A0i, self.A)
        D = A0i @ self.D @ A0i.T
        return VectorPeriodicArmaModel(A, self.b, 0.5 * (D + D.T), self.N)

    def state_matrix(self) -> np.ndarray:
        """Block companion matrix of ``A`` (after ``A_0 = I`` normalization)."""
        A = self.normalized().A
        n, m = self.n, self.m
        F = np.zeros((n * m, n * m))
        for k in range(1, n + 1):
            F[:m, (k - 1) * m:k * m] = -A[k]
        F[m:, :-m] = np.eye((n - 1) * m)
        return F

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "D": self.D.tolist(), "N": self.N}


def _A_on_circle(A, N) -> np.ndarray:
    Az = polynomial_on_circle(A, N)
    s = np.linalg.svd(Az, compute_uv=False)
    scale = max(np.abs(A).sum(axis=0).max(), np.finfo(float).tiny)
    bad = np.flatnonzero(s[:, -1] <= 1e-12 * scale)
    if bad.size:
        j = int(DiscreteCircle(N).indices[bad[0]])
        raise SingularSymbolError(f"A(zeta) is singular at node j = {j}", node=j)
    return Az


def _blocks(C) -> np.ndarray:
    d = C if isinstance(C, CovarianceData) else CovarianceData(C)
    return d.blocks()


def gamma_blocks(A, b, N: int) -> np.ndarray:
    """Periodic impulse response ``Gamma_t`` of ``A^{-1} b``, shape ``(2N, m, m)``, symmetric layout."""
    A = np.asarray(A, dtype=float)
    bz = polynomial_on_circle(b, N)
    G = np.linalg.inv(_A_on_circle(A, N)) * bz[:, None, None]
    return idft(G, N, real=True)


def toeplitz_Gamma(Gamma, n: int) -> np.ndarray:
    """Block matrix with block ``(i, j)`` equal to ``Gamma_{i-j}^T``."""
    Gamma = np.asarray(Gamma)
    N, m = Gamma.shape[0] // 2, Gamma.shape[1]
    T = np.empty(((n + 1) * m, (n + 1) * m))
    for i in range(n + 1):
        for j in range(n + 1):
            T[i * m:(i + 1) * m, j * m:(j + 1) * m] = Gamma[periodic_position(i - j, N)].T
    return T


def scaling_D(A, b, C, Gamma) -> np.ndarray:
    """``(sum_k A_k C_k^T)(sum_k b_k Gamma_k^T)^{-1}``, symmetrized.

    Raises
    ------
    DegenerateScalingError
        If the second factor is singular.
    """
    A = np.asarray(A, dtype=float)
    Cb = _blocks(C)
    n = A.shape[0] - 1
    N = np.asarray(Gamma).shape[0] // 2
    X = sum(A[k] @ Cb[k].T for k in range(n + 1))
    Y = sum(b[k] * Gamma[periodic_position(k, N)].T for k in range(n + 1))
    if np.linalg.cond(Y) > 1e12:
        raise DegenerateScalingError("sum_k b_k Gamma_k^T is numerically singular")
    D = np.linalg.solve(Y.T, X.T).T
    asym = np.abs(D - D.T).max() / max(np.abs(D).max(), np.finfo(float).tiny)
    if asym > ASYMMETRY_WARN:
        logger.warning("scaling matrix asymmetry %.2e (relative)", asym)
    return 0.5 * (D + D.T)


def _row(A) -> np.ndarray:
    return np.concatenate(list(A), axis=1)


def _unrow(R, n, m) -> np.ndarray:
    return np.stack([R[:, k * m:(k + 1) * m] for k in range(n + 1)])


def raw_step_vec(A, b, C, N: int):
    """Raw iterate ``D B T_Gamma(A) T_n^{-1}`` and the ``D`` used.

    Returns
    -------
    A_raw : ndarray, shape (n+1, m, m)
    D : ndarray, shape (m, m)
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = A.shape[0] - 1, A.shape[1]
    data = C if isinstance(C, CovarianceData) else CovarianceData(C)
    Gamma = gamma_blocks(A, b, N)
    D = scaling_D(A, b, data, Gamma)
    Bm = np.kron(b[None, :], np.eye(m))
    rhs = D @ Bm @ toeplitz_Gamma(Gamma, n)
    # R T_n = rhs  <=>  T_n R^T = rhs^T  (T_n symmetric)
    R = linalg.solve(data.toeplitz(), rhs.T, assume_a="pos").T
    return _unrow(R, n, m), D


def _whiten(A_raw, D) -> np.ndarray:
    """``W A_raw`` with ``W^T W = D^{-1}`` and ``W A_raw_0`` lower triangular."""
    L = np.linalg.cholesky(D)
    W = np.linalg.inv(L)
    X = np.einsum("ab,kbc->kac", W, A_raw)
    U, _ = _ql(X[0])
    X = np.einsum("ab,kbc->kac", U.T, X)
    X[0] = np.tril(X[0])
    return X


def _project(X, N) -> np.ndarray:
    """Schur factor of ``X(1/z)^T X(z)`` (``A_0`` lower triangular, positive diagonal)."""
    if is_schur(X, margin=1e-9):
        U, _ = _ql(X[0])
        Y = np.einsum("ab,kbc->kac", U.T, X)
        Y[0] = np.tril(Y[0])
        return Y
    Q = coefficient_match_check(X, convention="right")
    return matrix_schur_factor(Q, convention="right", N=N).coeffs


def iterate_vec(A, b, C, N: int) -> np.ndarray:
    """One raw step followed by projection onto matrix-Schur polynomials.

    The result represents the model ``A(1/z)^T A(z) = A_raw(1/z)^T D^{-1} A_raw(z)``
    with unit noise covariance; :func:`scaling_D` recovers ``D`` for any other
    left normalization.
    """
    A_raw, D = raw_step_vec(A, b, C, N)
    return _project(_whiten(A_raw, D), N)


def fixed_point_residual(A, b, C, N: int) -> float:
    """``max |A T_n - D(A) B T_Gamma(A)|`` (zero exactly at a solution)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = A.shape[0] - 1, A.shape[1]
    data = C if isinstance(C, CovarianceData) else CovarianceData(C)
    Gamma = gamma_blocks(A, b, N)
    D = scaling_D(A, b, data, Gamma)
    lhs = _row(A) @ data.toeplitz()
    rhs = D @ np.kron(b[None, :], np.eye(m)) @ toeplitz_Gamma(Gamma, n)
    return float(np.abs(lhs - rhs).max())


def _log_det_term(A, b, N) -> float:
    Az = _A_on_circle(np.asarray(A, dtype=float), N)
    P = np.abs(polynomial_on_circle(b, N)) ** 2
    _, logabs = np.linalg.slogdet(Az)
    return float(np.mean(P * 2.0 * logabs))


def objective_vec(A, b, C, N: int) -> float:
    """``tr(A T_n A^T) - int |b|^2 log det[A^* A] dnu``."""
    R = _row(np.asarray(A, dtype=float))
    T = (C if isinstance(C, CovarianceData) else CovarianceData(C)).toeplitz()
    return float(np.trace(R @ T @ R.T)) - _log_det_term(A, b, N)


def profile_objective_vec(A, b, C, N: int) -> float:
    """Minimum of :func:`objective_vec` over left factors ``M A``.

    Invariant under ``A -> M A``; with ``p = sum b_k^2`` it equals
    ``p m (1 - log p) + p log det(A T_n A^T) - int |b|^2 log |det A|^2 dnu``.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[1]
    b = np.asarray(b, dtype=float)
    p = float(b @ b)
    R = _row(A)
    T = (C if isinstance(C, CovarianceData) else CovarianceData(C)).toeplitz()
    _, logdet_s = np.linalg.slogdet(R @ T @ R.T)
    return p * m * (1.0 - np.log(p)) + p * logdet_s - _log_det_term(A, b, N)


def block_lags(A, b, D, N: int, n_lags: int | None = None) -> np.ndarray:
    """Block lags of the model ``(A, b, D)``."""
    return VectorPeriodicArmaModel(A, b, D, N).covariances(n_lags)


def _normalize(A) -> np.ndarray:
    return np.einsum("ab,kbc->kac", np.linalg.inv(A[0]), A)


def solve_vec(C, b, N: int, config: SolverConfig | None = None, A_init=None):
    """Matrix quasi-Newton iteration with spectral-factor projection.

    Parameters
    ----------
    C : array_like, shape (n+1, m, m)
        Block lags with positive definite block-Toeplitz matrix.
    b : array_like
        Monic Schur scalar numerator.
    N : int
    config : SolverConfig, optional
    A_init : array_like, optional
        Defaults to the Levinson-Whittle (maximum-entropy) polynomial.

    Returns
    -------
    model : VectorPeriodicArmaModel
        Normalized to ``A_0 = I``.
    report : SolveReport
        ``sigma2_trajectory`` holds the ``D`` matrices; ``gradient_norm``
        is the fixed-point residual of the normalized iterate.
    """
    config = config or SolverConfig()
    data = C if isinstance(C, CovarianceData) else CovarianceData(C)
    if not data.is_block:
        data = CovarianceData(data.blocks())
    Cb = data.lags
    n, m = data.n, data.m
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.shape[0] != n + 1:
        raise DimensionError(f"b has degree {b.shape[0] - 1}, data has n = {n}")
    if n >= N:
        raise DimensionError(f"n < N required (n = {n}, N = {N})")
    if b[0] != 1.0:
        raise ValueError(f"b must be monic (b_0 = 1), got b_0 = {b[0]}")
    if n and np.any(np.abs(polynomial_roots(b)) >= 1.0):
        raise ValueError("b must be a Schur polynomial")
    check = toeplitz_pd(data)
    if not check.positive_definite:
        raise NotPositiveDefiniteError(
            f"block Toeplitz matrix is not PD (min eigenvalue {check.min_eigenvalue:.3e})")

    if n == 0:
        model = VectorPeriodicArmaModel(np.eye(m)[None], [1.0], Cb[0], N)
        return model, SolveReport("converged", 0, 0.0, 0.0, np.zeros((1, m, m)), [Cb[0]], [], 0)

    A = levinson_whittle(data)[0] if A_init is None else np.asarray(A_init, dtype=float)

    def step(X):
        A_raw, D = raw_step_vec(X, b, data, N)
        return _whiten(A_raw, D), D

    try:
        trace = run_descent(
            A, step, lambda X: _project(X, N),
            lambda X: profile_objective_vec(X, b, data, N),
            lambda X: fixed_point_residual(_normalize(X), b, data, N),
            config, normalize=_normalize)
    except FactorizationError as exc:
        report = SolveReport("infeasible", 0, np.nan, np.nan, np.full((n + 1, m, m), np.nan),
                             message=str(exc))
        raise InfeasibleAtNError(
            f"problem appears infeasible at N = {N}: {exc}; try N = {2 * N}", N=N, report=report
        ) from exc

    A = _normalize(trace.x)
    A[0] = np.eye(m)  # exact by construction; removes rounding from the inverse
    D = scaling_D(A, b, data, gamma_blocks(A, b, N))
    model = VectorPeriodicArmaModel(A, b, D, N)
    report = SolveReport(trace.status, trace.iterations, trace.step_norm, trace.gradient_norm,
                         model.covariances() - Cb, trace.sigma2_trajectory,
                         trace.objective_trajectory, trace.backtracks)
    logger.info("vector solve: %s after %d iterations, |residual| = %.2e",
                report.status, report.iterations, report.max_moment_residual)
    if not report.converged:
        raise ConvergenceError(
            f"no convergence in {config.max_iterations} iterations (last step "
            f"{trace.step_norm:.2e}, residual {trace.gradient_norm:.2e})", report=report)
    return model, report
