"""Covariance data, Toeplitz positivity and maximum-entropy initialization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError, NotPositiveDefiniteError

__all__ = [
    "CovarianceData",
    "ToeplitzCheck",
    "toeplitz_pd",
    "levinson",
    "reflection_coefficients",
    "levinson_whittle",
]


@dataclass(frozen=True)
class CovarianceData:
    """Lags ``c_0..c_n`` (shape ``(n+1,)``) or blocks ``C_0..C_n`` (shape ``(n+1, m, m)``).

    ``C_k = E[y(t+k) y(t)^T]``, so ``C_{-k} = C_k^T``.
    """

    lags: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.lags, dtype=float))
        if c.ndim == 2:
            raise DimensionError("block lags must have shape (n+1, m, m)")
        if c.ndim == 3 and c.shape[1] != c.shape[2]:
            raise DimensionError(f"blocks must be square, got {c.shape[1:]}")
        if c.ndim > 3 or c.shape[0] == 0:
            raise DimensionError(f"unsupported lag array shape {c.shape}")
        object.__setattr__(self, "lags", c)

    @property
    def n(self) -> int:
        return self.lags.shape[0] - 1

    @property
    def m(self) -> int:
        return 1 if self.lags.ndim == 1 else self.lags.shape[1]

    @property
    def is_block(self) -> bool:
        return self.lags.ndim == 3

    def blocks(self) -> np.ndarray:
        """Lags as ``(n+1, m, m)`` blocks (scalar data gets ``m = 1``)."""
        return self.lags if self.is_block else self.lags[:, None, None]

    def lag(self, k: int) -> np.ndarray:
        """``C_k`` for ``|k| <= n``, using ``C_{-k} = C_k^T``."""
        B = self.blocks()
        return B[k] if k >= 0 else B[-k].T

    def toeplitz(self) -> np.ndarray:
        """Symmetric (block-)Toeplitz matrix with block ``(i, j)`` equal to ``C_{j-i}``."""
        n, m = self.n, self.m
        T = np.empty(((n + 1) * m, (n + 1) * m))
        for i in range(n + 1):
            for j in range(n + 1):
                T[i * m:(i + 1) * m, j * m:(j + 1) * m] = self.lag(j - i)
        return T


def _as_data(data) -> CovarianceData:
    return data if isinstance(data, CovarianceData) else CovarianceData(data)


class ToeplitzCheck(NamedTuple):
    positive_definite: bool
    min_eigenvalue: float


def toeplitz_pd(data) -> ToeplitzCheck:
    """Positive definiteness of the (block-)Toeplitz matrix of ``data``.

    The verdict comes from a Cholesky attempt; the smallest eigenvalue is
    reported alongside it.
    """
    T = _as_data(data).toeplitz()
    try:
        np.linalg.cholesky(T)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    lam = float(np.linalg.eigvalsh(T)[0])
    return ToeplitzCheck(pd and lam > 0, lam)


def _levinson_durbin(c: np.ndarray):
    n = c.shape[0] - 1
    a = np.zeros(n + 1)
    a[0] = 1.0
    err = c[0]
    if err <= 0:
        raise NotPositiveDefiniteError(f"c_0 = {c[0]} is not positive")
    refl = np.zeros(n)
    for p in range(1, n + 1):
        k = -(a[:p] @ c[p:0:-1]) / err
        if not abs(k) < 1.0:
            raise NotPositiveDefiniteError(
                f"reflection coefficient {p} has modulus {abs(k):.6g} >= 1; Toeplitz matrix not PD")
        a[: p + 1] = a[: p + 1] + k * a[p::-1]
        err *= 1.0 - k * k
        refl[p - 1] = k
    return a, err, refl


def levinson(data):
    """Maximum-entropy (AR) polynomial by the Levinson-Durbin recursion.

    Parameters
    ----------
    data : CovarianceData or array_like
        Scalar lags ``c_0..c_n``.

    Returns
    -------
    a : ndarray, shape (n+1,)
        Monic Schur polynomial with ``T_n a = sigma2 e_1``.
    sigma2 : float
        Prediction-error variance of order n.
    """
    d = _as_data(data)
    if d.is_block:
        raise DimensionError("levinson expects scalar lags; use levinson_whittle for blocks")
    a, err, _ = _levinson_durbin(d.lags)
    return a, float(err)


def reflection_coefficients(data) -> np.ndarray:
    """Reflection (PARCOR) coefficients; all lie in (-1, 1) iff ``T_n`` is PD."""
    d = _as_data(data)
    c = d.lags
    n = d.n
    a = np.zeros(n + 1)
    a[0] = 1.0
    err = c[0]
    refl = np.zeros(n)
    for p in range(1, n + 1):
        k = -(a[:p] @ c[p:0:-1]) / err if err > 0 else np.inf
        refl[p - 1] = k
        if not abs(k) < 1.0:
            refl[p:] = np.nan
            break
        a[: p + 1] = a[: p + 1] + k * a[p::-1]
        err *= 1.0 - k * k
    return refl


def _chol_check(V: np.ndarray, what: str):
    try:
        np.linalg.cholesky(0.5 * (V + V.T))
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} is not positive definite; block Toeplitz data not PD")


def levinson_whittle(data):
    """Multivariate Levinson recursion (Whittle).

    Returns ``(A, D)`` with ``A`` of shape ``(n+1, m, m)``, ``A_0 = I`` and
    ``[A_0 .. A_n] T_n = [D, 0, .., 0]``.
    """
    d = _as_data(data)
    C = d.blocks()
    n, m = d.n, d.m
    _chol_check(C[0], "C_0")
    A = np.zeros((n + 1, m, m))
    B = np.zeros((n + 1, m, m))
    A[0] = B[0] = np.eye(m)
    Vf = C[0].copy()
    Vb = C[0].copy()
    for p in range(n):
        # Delta = E[e_p(t) r_p(t-1)^T]
        delta = sum(A[i] @ C[p + 1 - i] for i in range(p + 1))
        Kf = np.linalg.solve(Vb.T, delta.T).T
        Kb = np.linalg.solve(Vf.T, delta).T
        A_new, B_new = A.copy(), B.copy()
        for i in range(p + 2):
            A_new[i] = A[i] - Kf @ B[p + 1 - i]
            B_new[i] = B[i] - Kb @ A[p + 1 - i]
        A, B = A_new, B_new
        Vf = Vf - Kf @ delta.T
        Vb = Vb - Kb @ delta
        _chol_check(Vf, f"forward error covariance at order {p + 1}")
    D = 0.5 * (Vf + Vf.T)
    return A, D
