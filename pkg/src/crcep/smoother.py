"""Fixed-interval smoothing of a periodic ARMA-modeled state.

The state ``x`` on Z_2N has the prior of a vector periodic ARMA model, so
its covariance is ``Sigma = Q^{-1} P`` with ``Q = A^T (I (x) D^{-1}) A`` and
``P = |b|^2 (x) I`` banded circulants. Observations ``y = C x + v`` give the
minimum-variance estimate

    (Q + P C^T R^{-1} C) x_hat = P C^T R^{-1} y,

whose banded block-circulant matrix ``Q_hat`` is factored as ``A_hat A_hat^T``
and solved by one forward and one backward sweep.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dft import BandedCirculant, circ_solve, symbol_of
from .exceptions import BandViolationError, DimensionError, NotPositiveDefiniteError
from .solver import SolverConfig
from .spectral_factor import coefficient_match_check, matrix_schur_factor
from .toeplitz import CovarianceData
from .vector import VectorPeriodicArmaModel, solve_vec

__all__ = [
    "StateSpaceModel",
    "ObservationChannel",
    "SmoothingProblem",
    "SmoothingResult",
    "lyapunov_lags",
    "prior_circulants",
    "posterior_circulant",
    "factor_posterior",
    "observation_rhs",
    "forward_sweep",
    "backward_sweep",
    "smooth",
    "direct_smooth_oracle",
]

logger = logging.getLogger(__name__)

LYAPUNOV_TOL = 1e-12


def _spd(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(np.abs(M).max(), 1.0)):
        raise ValueError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{name} is not positive definite") from None
    return M


@dataclass(frozen=True)
class StateSpaceModel:
    """``x(t+1) = A x(t) + w(t)``, ``y(t) = C x(t) + v(t)`` with ``cov(w) = W``, ``cov(v) = R``."""

    A: np.ndarray
    C: np.ndarray
    W: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        m = A.shape[0]
        if A.shape != (m, m):
            raise DimensionError(f"A must be square, got {A.shape}")
        if C.shape[1] != m:
            raise DimensionError(f"C must have {m} columns, got {C.shape}")
        W = _spd(self.W, "W")
        R = _spd(self.R, "R")
        if W.shape != (m, m) or R.shape != (C.shape[0],) * 2:
            raise DimensionError("W must be m x m and R must be p x p")
        rho = float(np.abs(np.linalg.eigvals(A)).max())
        if rho >= 1.0:
            raise ValueError(f"state matrix is not stable (spectral radius {rho:.6g})")
        for name, val in (("A", A), ("C", C), ("W", W), ("R", R)):
            object.__setattr__(self, name, val)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def channel(self) -> "ObservationChannel":
        return ObservationChannel(self.C, self.R)


@dataclass(frozen=True)
class ObservationChannel:
    """``y(t) = C x(t) + v(t)``, ``cov(v) = R``."""

    C: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        R = _spd(self.R, "R")
        if R.shape[0] != C.shape[0]:
            raise DimensionError(f"R must be {C.shape[0]} x {C.shape[0]}, got {R.shape}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "R", R)

    def information(self) -> np.ndarray:
        """``C^T R^{-1} C``."""
        return self.C.T @ np.linalg.solve(self.R, self.C)


def lyapunov_lags(ss: StateSpaceModel, n: int) -> CovarianceData:
    """Stationary state covariances ``C_k = A^k P``, ``k = 0..n``.

    ``P = sum_j A^j W (A^j)^T`` is accumulated by doubling,
    ``P <- P + F P F^T``, ``F <- F^2``, until ``P = A P A^T + W`` holds to
    ``1e-12`` relative.
    """
    A, W = ss.A, ss.W
    P, F = W.copy(), A.copy()
    for _ in range(64):
        P = P + F @ P @ F.T
        F = F @ F
        if np.abs(A @ P @ A.T + W - P).max() <= LYAPUNOV_TOL * np.abs(P).max():
            break
    else:
        raise ValueError("Lyapunov doubling did not converge")
    P = 0.5 * (P + P.T)
    lags = [P]
    for _ in range(n):
        lags.append(A @ lags[-1])
    return CovarianceData(np.stack(lags))


@dataclass(frozen=True)
class SmoothingProblem:
    """Prior model for ``x``, observation channel and observations ``y(-N+1..N)`` (rows)."""

    prior: VectorPeriodicArmaModel
    channel: ObservationChannel
    observations: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.observations, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        N, m = self.prior.N, self.prior.m
        if y.shape != (2 * N, self.channel.C.shape[0]):
            raise DimensionError(
                f"observations must have shape (2N, p) = ({2 * N}, {self.channel.C.shape[0]}), "
                f"got {y.shape}")
        if self.channel.C.shape[1] != m:
            raise DimensionError(f"C must have {m} columns to match the prior")
        object.__setattr__(self, "observations", y)

    @property
    def N(self) -> int:
        return self.prior.N

    @classmethod
    def from_state_space(cls, ss: StateSpaceModel, observations, N: int, b,
                         config: SolverConfig | None = None):
        """Fit the periodic prior to the first ``len(b)`` stationary state lags.

        Returns
        -------
        problem : SmoothingProblem
        report : SolveReport
            Report of the vector covariance-extension solve.
        """
        b = np.atleast_1d(np.asarray(b, dtype=float))
        lags = lyapunov_lags(ss, b.shape[0] - 1)
        prior, report = solve_vec(lags, b, N, config)
        return cls(prior, ss.channel, observations), report


@dataclass
class SmoothingResult:
    x_hat: np.ndarray
    z: np.ndarray
    Q_hat: BandedCirculant
    A_hat: BandedCirculant
    forward_residual: float
    backward_residual: float
    normal_residual: float
    diagnostics: dict = field(default_factory=dict)


def prior_circulants(prior: VectorPeriodicArmaModel):
    """Banded circulants ``Q = A^T (I (x) D^{-1}) A`` and ``P = |b|^2 (x) I``."""
    L = np.linalg.cholesky(np.linalg.inv(prior.D))
    WA = np.einsum("ba,kbc->kac", L, prior.A)  # L^T A_k, (L^T)^T L^T = D^{-1}
    Qk = coefficient_match_check(WA, convention="right")
    pk = coefficient_match_check(prior.b)
    Pk = pk[:, None, None] * np.eye(prior.m)[None]
    return BandedCirculant.symmetric(Qk, prior.N), BandedCirculant.symmetric(Pk, prior.N)


def posterior_circulant(Q: BandedCirculant, P: BandedCirculant, C, R) -> BandedCirculant:
    """``Q_hat = Q + P (I (x) C^T R^{-1} C)``; bandwidth never exceeds that of ``Q`` and ``P``.

    Raises
    ------
    BandViolationError
        If the product leaks outside the band (an internal inconsistency).
    """
    info = ObservationChannel(C, R).information()
    M = BandedCirculant.symmetric(info[None], Q.N)
    PM = P @ M
    Q_hat = Q + PM
    n = max(Q.bandwidth, P.bandwidth)
    if Q_hat.bandwidth > n:
        raise BandViolationError(f"posterior bandwidth {Q_hat.bandwidth} exceeds {n}", 0.0)
    blocks = 0.5 * (Q_hat.blocks + np.swapaxes(Q_hat.blocks[::-1], -1, -2))
    return BandedCirculant(blocks, Q.N, "symmetric")


def factor_posterior(Q_hat: BandedCirculant) -> BandedCirculant:
    """Lower banded circulant ``A_hat`` with ``A_hat A_hat^T = Q_hat``.

    Raises
    ------
    InfeasibleAtNError
        If the symbol is positive on the nodes but not on the unit circle.
    """
    n = Q_hat.bandwidth
    coeffs = np.array([Q_hat.coefficient(k) for k in range(n + 1)])
    A_hat = matrix_schur_factor(coeffs, convention="left", N=Q_hat.N).coeffs
    return BandedCirculant.lower(A_hat, Q_hat.N)


def observation_rhs(P: BandedCirculant, channel: ObservationChannel, y) -> np.ndarray:
    """``y_hat = P (I (x) C^T R^{-1}) y``, rows indexed ``t = -N+1..N``."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    u = np.linalg.solve(channel.R, y.T).T @ channel.C
    return P.matvec(u)


def _sweep(L: np.ndarray, rhs: np.ndarray, sign: int, boundary=None):
    """Solve ``sum_i L_i x(t + sign*i) = rhs(t)`` cyclically by recursion.

    Positions ``2N-n..2N-1`` hold the boundary. The recursion runs over the
    remaining positions (ascending for ``sign = -1``, descending for
    ``sign = +1``); when ``boundary`` is None it is found from the last
    ``n`` equations, which are affine in it.
    """
    n, m = L.shape[0] - 1, L.shape[1]
    T = rhs.shape[0]
    if n == 0:
        return np.linalg.solve(L[0], rhs.T).T
    L0inv = np.linalg.inv(L[0])
    nb = n * m
    # columns: particular solution, then one column per boundary unknown
    X = np.zeros((T, m, 1 + nb))
    X[:, :, 0] = 0.0
    if boundary is not None:
        X[T - n:, :, 0] = np.asarray(boundary, dtype=float).reshape(n, m)
    else:
        X[T - n:, :, 1:] = np.eye(nb).reshape(n, m, nb)
    R = np.zeros((T, m, 1 + nb))
    R[:, :, 0] = rhs
    order = range(T - n) if sign < 0 else range(T - n - 1, -1, -1)
    for t in order:
        acc = R[t].copy()
        for i in range(1, n + 1):
            acc -= L[i] @ X[(t + sign * i) % T]
        X[t] = L0inv @ acc
    if boundary is not None:
        return X[:, :, 0]
    res = np.empty((n, m, 1 + nb))
    for r, t in enumerate(range(T - n, T)):
        res[r] = sum(L[i] @ X[(t + sign * i) % T] for i in range(n + 1)) - R[t]
    res = res.reshape(nb, 1 + nb)
    u = np.linalg.solve(res[:, 1:], -res[:, 0])
    return X[:, :, 0] + X[:, :, 1:] @ u


def forward_sweep(A_hat: BandedCirculant, y_hat, boundary=None) -> np.ndarray:
    """Solve ``A_hat z = y_hat``: ``z(t) = A_0^{-1}[y_hat(t) - sum_i A_i z(t-i)]``.

    Parameters
    ----------
    boundary : array_like, shape (n, m), optional
        ``z(N-n+1..N)``; computed self-consistently when omitted.
    """
    L = np.array([A_hat.coefficient(k) for k in range(A_hat.bandwidth + 1)])
    y_hat = np.asarray(y_hat, dtype=float)
    squeeze = y_hat.ndim == 1
    z = _sweep(L, y_hat.reshape(y_hat.shape[0], -1), -1, boundary)
    return z[:, 0] if squeeze else z


def backward_sweep(A_hat: BandedCirculant, z, boundary=None) -> np.ndarray:
    """Solve ``A_hat^T x = z``: ``x(t) = A_0^{-T}[z(t) - sum_i A_i^T x(t+i)]``.

    Parameters
    ----------
    boundary : array_like, shape (n, m), optional
        Terminal values ``x(N-n+1..N)``; computed self-consistently when omitted.
    """
    L = np.array([A_hat.coefficient(k).T for k in range(A_hat.bandwidth + 1)])
    z = np.asarray(z, dtype=float)
    squeeze = z.ndim == 1
    x = _sweep(L, z.reshape(z.shape[0], -1), +1, boundary)
    return x[:, 0] if squeeze else x


def smooth(problem: SmoothingProblem) -> SmoothingResult:
    """Two-sweep minimum-variance smoother."""
    Q, P = prior_circulants(problem.prior)
    ch = problem.channel
    Q_hat = posterior_circulant(Q, P, ch.C, ch.R)
    A_hat = factor_posterior(Q_hat)
    y_hat = observation_rhs(P, ch, problem.observations)
    z = forward_sweep(A_hat, y_hat)
    x_hat = backward_sweep(A_hat, z)
    scale = max(np.abs(y_hat).max(), np.finfo(float).tiny)
    fwd = float(np.abs(A_hat.matvec(z) - y_hat).max())
    bwd = float(np.abs(A_hat.T.matvec(x_hat) - z).max())
    nrm = float(np.abs(Q_hat.matvec(x_hat) - y_hat).max())
    logger.debug("smoother residuals: forward %.2e, backward %.2e, normal %.2e (scale %.2e)",
                 fwd, bwd, nrm, scale)
    prod = A_hat @ A_hat.T
    factor_err = float(max(np.abs(prod.coefficient(k) - Q_hat.coefficient(k)).max()
                           for k in range(-prod.bandwidth, prod.bandwidth + 1)))
    return SmoothingResult(x_hat, z, Q_hat, A_hat, fwd, bwd, nrm,
                           {"factor_residual": factor_err, "rhs_scale": float(scale)})


def direct_smooth_oracle(problem: SmoothingProblem) -> np.ndarray:
    """Node-wise spectral solve of ``Q_hat x = y_hat`` (reference implementation)."""
    Q, P = prior_circulants(problem.prior)
    ch = problem.channel
    Q_hat = posterior_circulant(Q, P, ch.C, ch.R)
    y_hat = observation_rhs(P, ch, problem.observations)
    if np.linalg.eigvalsh(symbol_of(Q_hat).values).min() <= 0:
        raise NotPositiveDefiniteError("posterior circulant is not positive definite")
    return circ_solve(Q_hat, y_hat)
