"""Positivity tests and outer (Schur) spectral factorization.

A pseudo-polynomial ``p(z) = sum_{k=-n}^{n} p_k z**(-k)`` with ``p_{-k} = p_k``
(``P_{-k} = P_k^T`` in the matrix case) is stored by its one-sided
coefficients ``p_0..p_n``. A polynomial ``a(z) = sum_k a_k z**(-k)`` is
*Schur* when every root of ``z**n a(z)`` lies strictly inside the unit disk.

Scalar factors satisfy ``p(z) = a(z) a(1/z)`` with ``a_0 > 0``. Matrix
factors come in two conventions:

``"left"``
    ``Q(z) = A(z) A(1/z)^T``, i.e. ``Q_k = sum_j A_{j+k} A_j^T`` (banded
    circulant ``Q = A A^T``).
``"right"``
    ``Q(z) = A(1/z)^T A(z)``, i.e. ``Q_k = sum_j A_j^T A_{j+k}``.

In both cases ``A_0`` is lower triangular with a positive diagonal.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dft import BandedCirculant, DiscreteCircle, polynomial_on_circle
from .exceptions import DimensionError, FactorizationError, InfeasibleAtNError

__all__ = [
    "PseudoPolynomial",
    "SchurPolynomial",
    "PositivityReport",
    "is_positive_discrete",
    "is_positive_circle",
    "schur_factor",
    "matrix_schur_factor",
    "coefficient_match_check",
    "coefficient_jacobian",
    "polynomial_roots",
    "is_schur",
]

logger = logging.getLogger(__name__)

POSITIVITY_TOL = 1e-10
BOUNDARY_ROOT_TOL = 1e-6
CIRCLE_GRID = 4096


@dataclass(frozen=True)
class PseudoPolynomial:
    """Symmetric Laurent polynomial stored by ``p_0..p_n`` (scalars or m x m blocks)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim not in (1, 3) or (c.ndim == 3 and c.shape[1] != c.shape[2]):
            raise DimensionError(f"coefficients must be (n+1,) or (n+1, m, m), got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def is_matrix(self) -> bool:
        return self.coeffs.ndim == 3

    @property
    def m(self) -> int:
        return self.coeffs.shape[1] if self.is_matrix else 1

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def evaluate(self, z) -> np.ndarray:
        """Value at arbitrary nonzero complex points ``z``."""
        z = np.asarray(z, dtype=complex)
        c = self.coeffs
        k = np.arange(1, self.degree + 1)
        zk = z[..., None] ** (-k)
        zmk = z[..., None] ** k
        if not self.is_matrix:
            return c[0] + zk @ c[1:] + zmk @ c[1:]
        return (c[0] + np.tensordot(zk, c[1:], axes=(-1, 0))
                + np.tensordot(zmk, np.swapaxes(c[1:], -1, -2), axes=(-1, 0)))

    def on_circle(self, N: int) -> np.ndarray:
        return self.evaluate(DiscreteCircle(N).nodes)

    def to_circulant(self, N: int) -> BandedCirculant:
        return BandedCirculant.symmetric(self.coeffs, N)


@dataclass(frozen=True)
class SchurPolynomial:
    """Polynomial ``sum_k a_k z**(-k)`` whose shifted form has all roots in the open unit disk."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def is_matrix(self) -> bool:
        return self.coeffs.ndim == 3

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def roots(self) -> np.ndarray:
        return polynomial_roots(self.coeffs)

    def on_circle(self, N: int) -> np.ndarray:
        return polynomial_on_circle(self.coeffs, N)


@dataclass(frozen=True)
class PositivityReport:
    """Outcome of a node-wise positivity test. Truthy iff positive."""

    positive: bool
    min_value: float
    argmin_node: int

    def __bool__(self):
        return self.positive


def _as_pseudo(p) -> PseudoPolynomial:
    return p if isinstance(p, PseudoPolynomial) else PseudoPolynomial(p)


def _min_value(values: np.ndarray, is_matrix: bool) -> np.ndarray:
    if is_matrix:
        herm = 0.5 * (values + np.conj(np.swapaxes(values, -1, -2)))
        return np.linalg.eigvalsh(herm)[..., 0]
    return values.real


def is_positive_discrete(p, N: int, tol: float = POSITIVITY_TOL) -> PositivityReport:
    """Test ``p(zeta_j) > tol`` (smallest eigenvalue in the matrix case) at all 2N nodes."""
    p = _as_pseudo(p)
    if p.degree >= N:
        raise DimensionError(f"degree n = {p.degree} requires n < N, got N = {N}")
    vals = _min_value(p.on_circle(N), p.is_matrix)
    i = int(np.argmin(vals))
    return PositivityReport(bool(vals[i] > tol), float(vals[i]),
                            int(DiscreteCircle(N).indices[i]))


def _trim(c: np.ndarray) -> np.ndarray:
    scale = np.abs(c).max(initial=0.0)
    d = c.shape[0] - 1
    while d > 0 and abs(c[d]) <= 1e-15 * scale:
        d -= 1
    return c[: d + 1]


def _symmetric_roots(c: np.ndarray) -> np.ndarray:
    """Roots of ``z**n p(z)``, a palindromic polynomial of degree 2n."""
    if c.shape[0] == 1:
        return np.empty(0, dtype=complex)
    return np.roots(np.concatenate([c[:0:-1], c]))


def is_positive_circle(p, tol: float = POSITIVITY_TOL,
                       root_tol: float = BOUNDARY_ROOT_TOL) -> bool:
    """Test ``p(e^{i theta}) > 0`` for every theta.

    Scalar case: dense sampling plus the requirement that no root of
    ``z**n p(z)`` lies within ``root_tol`` of the unit circle. Matrix case:
    smallest eigenvalue over a fine grid.
    """
    p = _as_pseudo(p)
    theta = 2 * np.pi * np.arange(CIRCLE_GRID) / CIRCLE_GRID
    vals = _min_value(p.evaluate(np.exp(1j * theta)), p.is_matrix)
    if vals.min() <= tol:
        return False
    if p.is_matrix:
        return True
    roots = _symmetric_roots(_trim(p.coeffs))
    return not np.any(np.abs(np.abs(roots) - 1.0) < root_tol)


def polynomial_roots(coeffs) -> np.ndarray:
    """Roots of ``z**n a(z)`` (scalar) or of ``det(z**n A(z))`` via the block companion matrix."""
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 1:
        a = _trim(a)
        return np.roots(a) if a.shape[0] > 1 else np.empty(0, dtype=complex)
    n, m = a.shape[0] - 1, a.shape[1]
    if n == 0:
        return np.empty(0, dtype=complex)
    a0inv = np.linalg.inv(a[0])
    comp = np.zeros((n * m, n * m))
    comp[:m, :] = -np.hstack([a0inv @ a[k] for k in range(1, n + 1)])
    comp[m:, :-m] = np.eye((n - 1) * m)
    return np.linalg.eigvals(comp)


def is_schur(coeffs, margin: float = 0.0) -> bool:
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 1 and a[0] == 0:
        return False
    if a.ndim == 3 and abs(np.linalg.det(a[0])) == 0:
        return False
    r = polynomial_roots(a)
    return bool(np.all(np.abs(r) < 1.0 - margin))


def coefficient_match_check(a, convention: str = "left") -> np.ndarray:
    """Coefficients ``q_0..q_n`` of ``a(z) a(1/z)``, ``q_k = sum_j a_j a_{j+k}``.

    For matrix coefficients the ``convention`` selects ``A(z) A(1/z)^T``
    (``"left"``) or ``A(1/z)^T A(z)`` (``"right"``).
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0] - 1
    if a.ndim == 1:
        return np.array([a[: n + 1 - k] @ a[k:] for k in range(n + 1)])
    if convention == "left":
        return np.array([sum(a[j + k] @ a[j].T for j in range(n + 1 - k)) for k in range(n + 1)])
    if convention == "right":
        return np.array([sum(a[j].T @ a[j + k] for j in range(n + 1 - k)) for k in range(n + 1)])
    raise ValueError(f"unknown convention {convention!r}")


def coefficient_jacobian(a) -> np.ndarray:
    """Jacobian ``dq_i / da_j = a_{i+j} + a_{j-i}`` of :func:`coefficient_match_check`."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0] - 1
    i, j = np.indices((n + 1, n + 1))
    hankel = np.where(i + j <= n, a[np.minimum(i + j, n)], 0.0)
    upper = np.where(j >= i, a[np.clip(j - i, 0, n)], 0.0)
    return hankel + upper


def _check_factorizable(p: PseudoPolynomial, N):
    if is_positive_circle(p):
        return
    if N is not None and p.degree < N and is_positive_discrete(p, N):
        raise InfeasibleAtNError(
            f"pseudo-polynomial is positive on the {2 * N}-point circle but not on the "
            f"unit circle; increase N (try N = {2 * N})", N=N)
    raise FactorizationError("pseudo-polynomial is not positive on the unit circle")


def schur_factor(p, N: int | None = None, newton_steps: int = 6) -> SchurPolynomial:
    """Outer factor ``a`` with ``p(z) = a(z) a(1/z)``, ``a_0 > 0``.

    Roots of ``z**n p(z)`` inside the unit disk define ``a`` up to scale; the
    scale comes from ``q_0 = p_0`` and a few Newton steps on the coefficient
    equations polish the result.

    Parameters
    ----------
    p : PseudoPolynomial or array_like
        Coefficients ``p_0..p_n``.
    N : int, optional
        Half-period of the discrete circle the data lives on; used only to
        distinguish infeasibility at this ``N`` from plain non-positivity.

    Raises
    ------
    InfeasibleAtNError
        ``p`` is positive on the 2N nodes but not on the unit circle.
    FactorizationError
        ``p`` is not positive.
    """
    p = _as_pseudo(p)
    if p.is_matrix:
        raise DimensionError("use matrix_schur_factor for matrix pseudo-polynomials")
    _check_factorizable(p, N)
    n = p.degree
    c = _trim(p.coeffs)
    d = c.shape[0] - 1
    roots = _symmetric_roots(c)
    inside = roots[np.argsort(np.abs(roots))][:d]
    monic = np.real(np.poly(inside)) if d else np.ones(1)
    a = np.zeros(n + 1)
    a[: d + 1] = monic * np.sqrt(c[0] / (monic @ monic))
    a = _newton_polish(a, p.coeffs, newton_steps)
    return SchurPolynomial(a)


def _newton_polish(a: np.ndarray, target: np.ndarray, steps: int) -> np.ndarray:
    res = coefficient_match_check(a) - target
    for _ in range(steps):
        if not np.any(res):
            break
        try:
            step = np.linalg.solve(coefficient_jacobian(a), res)
        except np.linalg.LinAlgError:
            break
        trial = a - step
        trial_res = coefficient_match_check(trial) - target
        if np.abs(trial_res).max() >= np.abs(res).max():
            break
        a, res = trial, trial_res
    return a


# ---------------------------------------------------------------------------
# matrix case


def _ql(M: np.ndarray):
    """``M = U @ L`` with ``U`` orthogonal and ``L`` lower triangular, positive diagonal."""
    q, r = np.linalg.qr(M[::-1, ::-1])
    U, L = q[::-1, ::-1], r[::-1, ::-1]
    s = np.sign(np.diag(L))
    s[s == 0] = 1.0
    return U * s, s[:, None] * L


def _bauer(Q: np.ndarray, K: int) -> np.ndarray:
    """Last block row of the Cholesky factor of the K-block banded Toeplitz matrix of ``Q``."""
    n, m = Q.shape[0] - 1, Q.shape[1]
    u = (n + 1) * m - 1
    size = K * m
    ab = np.zeros((u + 1, size))
    # lower banded storage: ab[r - c, c] = T[r, c] for r >= c
    for k in range(n + 1):
        blk = Q[k]
        for a in range(m):
            for b in range(m):
                off = k * m + a - b
                if 0 <= off <= u:
                    cols = np.arange(b, size - k * m, m)
                    ab[off, cols] = blk[a, b]
    lb = linalg.cholesky_banded(ab, lower=True, check_finite=False)
    A = np.empty((n + 1, m, m))
    rows = np.arange((K - 1) * m, K * m)
    for k in range(n + 1):
        cols = np.arange((K - 1 - k) * m, (K - k) * m)
        offs = rows[:, None] - cols[None, :]
        # entries above the diagonal are not stored (and are zero)
        A[k] = np.where(offs >= 0, lb[np.maximum(offs, 0), cols[None, :]], 0.0)
    return A


def _matrix_newton(A: np.ndarray, Q: np.ndarray, steps: int = 8) -> np.ndarray:
    """Newton refinement of ``sum_j A_{j+k} A_j^T = Q_k`` over lower-triangular ``A_0``."""
    n, m = A.shape[0] - 1, A.shape[1]
    tril = np.tril_indices(m)
    free = [(0, i, j) for i, j in zip(*tril)] + [
        (k, i, j) for k in range(1, n + 1) for i in range(m) for j in range(m)]

    def residual(X):
        R = coefficient_match_check(X) - Q
        return np.concatenate([R[0][tril]] + [R[k].ravel() for k in range(1, n + 1)])

    res = residual(A)
    for _ in range(steps):
        if np.abs(res).max() <= 1e-15 * max(np.abs(Q).max(), 1.0):
            break
        jac = np.empty((res.size, len(free)))
        for col, (k, i, j) in enumerate(free):
            E = np.zeros_like(A)
            E[k, i, j] = 1.0
            jac[:, col] = 0.5 * (residual(A + E) - residual(A - E))
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError:
            break
        trial = A.copy()
        for col, (k, i, j) in enumerate(free):
            trial[k, i, j] -= step[col]
        trial_res = residual(trial)
        if np.abs(trial_res).max() >= np.abs(res).max():
            break
        A, res = trial, trial_res
    return A


def matrix_schur_factor(Q, convention: str = "left", N: int | None = None,
                        tol: float = 1e-12, max_blocks: int = 8192) -> SchurPolynomial:
    """Outer factor of a matrix pseudo-polynomial.

    Bauer's method (Cholesky of a growing banded block-Toeplitz section)
    provides a starting factor which Newton steps on the coefficient
    equations then refine. The section length doubles until the refined
    factor reproduces ``Q`` to ``tol`` (relative).

    Parameters
    ----------
    Q : PseudoPolynomial or array_like, shape (n+1, m, m)
    convention : {"left", "right"}
        ``Q = A(z) A(1/z)^T`` or ``Q = A(1/z)^T A(z)``.
    N : int, optional
        Used to classify a positivity failure as infeasible-at-N.

    Returns
    -------
    SchurPolynomial
        Coefficients ``A_0..A_n`` with ``A_0`` lower triangular, positive diagonal.
    """
    Qp = _as_pseudo(Q)
    if not Qp.is_matrix:
        Qp = PseudoPolynomial(Qp.coeffs[:, None, None])
    _check_factorizable(Qp, N)
    coeffs = Qp.coeffs
    if convention == "right":
        coeffs = np.swapaxes(coeffs, -1, -2)
    elif convention != "left":
        raise ValueError(f"unknown convention {convention!r}")
    n = coeffs.shape[0] - 1
    scale = np.abs(coeffs).max()
    K = max(64, 8 * (n + 1))
    A, err = None, np.inf
    while K <= max_blocks:
        A = _matrix_newton(_bauer(coeffs, K), coeffs)
        err = np.abs(coefficient_match_check(A) - coeffs).max() / scale
        if err <= tol and is_schur(A):
            break
        K *= 2
    else:
        raise FactorizationError(
            f"matrix spectral factorization did not converge (relative residual {err:.2e})")
    logger.debug("matrix factor: %d blocks, residual %.2e", K, err)
    if convention == "right":
        A = np.swapaxes(A, -1, -2)
        U, _ = _ql(A[0])
        A = np.einsum("ab,kbc->kac", U.T, A)
        A[0] = np.tril(A[0])
    return SchurPolynomial(A)
