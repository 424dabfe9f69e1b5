"""Sample paths and sample covariances."""
from __future__ import annotations

import numpy as np

from .dft import dft, idft, polynomial_on_circle
from .periodic import PeriodicArmaModel
from .smoother import StateSpaceModel, lyapunov_lags
from .vector import VectorPeriodicArmaModel

__all__ = ["simulate_periodic", "simulate_state_space", "sample_lags"]


def simulate_periodic(model, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """One period ``y(-N+1..N)`` of ``A y = B w`` on Z_2N.

    The noise ``w`` is i.i.d. Gaussian with covariance ``D`` (or ``sigma2``)
    and the cyclic system is solved exactly, so ``y`` is a stationary
    periodic process with the model's covariance.

    Returns
    -------
    ndarray, shape (2N,) for a scalar model or (2N, m) for a vector model.
    """
    rng = np.random.default_rng(rng)
    if isinstance(model, PeriodicArmaModel):
        N = model.N
        w = rng.standard_normal(2 * N) * np.sqrt(model.sigma2)
        H = polynomial_on_circle(model.b, N) / polynomial_on_circle(model.a, N)
        return idft(H * dft(w, N).values, N, real=True)
    if isinstance(model, VectorPeriodicArmaModel):
        N = model.N
        L = np.linalg.cholesky(model.D)
        w = rng.standard_normal((2 * N, model.m)) @ L.T
        Az = polynomial_on_circle(model.A, N)
        bz = polynomial_on_circle(model.b, N)
        yh = np.linalg.solve(Az, (bz[:, None] * dft(w, N).values)[..., None])[..., 0]
        return idft(yh, N, real=True)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def simulate_state_space(ss: StateSpaceModel, length: int,
                         rng: np.random.Generator | int | None = None):
    """Stationary trajectory of ``x(t+1) = A x(t) + w(t)``, ``y = C x + v``.

    ``x`` starts from its stationary distribution, so no burn-in is needed.

    Returns
    -------
    x : ndarray, shape (length, m)
    y : ndarray, shape (length, p)
    """
    rng = np.random.default_rng(rng)
    P = lyapunov_lags(ss, 0).lags[0]
    Lw = np.linalg.cholesky(ss.W)
    Lr = np.linalg.cholesky(ss.R)
    x = np.empty((length, ss.m))
    x[0] = np.linalg.cholesky(P) @ rng.standard_normal(ss.m)
    for t in range(1, length):
        x[t] = ss.A @ x[t - 1] + Lw @ rng.standard_normal(ss.m)
    y = x @ ss.C.T + rng.standard_normal((length, ss.p)) @ Lr.T
    return x, y


def sample_lags(y, n: int, periodic: bool = True) -> np.ndarray:
    """Biased sample covariances ``C_k = (1/T) sum_t y(t+k) y(t)^T``, ``k = 0..n``.

    With ``periodic=True`` the time index wraps around (the natural estimate
    for one period of a cyclic process) and the block Toeplitz matrix is
    always positive semidefinite.

    Returns
    -------
    ndarray, shape (n+1,) for scalar ``y`` or (n+1, m, m).
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    Y = y[:, None] if scalar else y
    T = Y.shape[0]
    if n >= T:
        raise ValueError(f"need more than n = {n} samples, got {T}")
    lags = np.empty((n + 1, Y.shape[1], Y.shape[1]))
    for k in range(n + 1):
        lead = np.roll(Y, -k, axis=0) if periodic else Y[k:]
        base = Y if periodic else Y[: T - k]
        lags[k] = lead.T @ base / T
    return lags[:, 0, 0] if scalar else lags
