import numpy as np
import pytest
from scipy import linalg

A_SS = np.array([[0.9, -0.3], [0.3, 0.9]])
C_OBS = np.array([[1.0, 2.0], [1.0, 0.0]])


def random_schur(rng, n, rho=0.9):
    """Monic real polynomial of degree n with roots of modulus below rho."""
    roots = []
    while len(roots) < n:
        if n - len(roots) >= 2 and rng.random() < 0.5:
            z = rng.uniform(0, rho) * np.exp(1j * rng.uniform(0, np.pi))
            roots += [z, np.conj(z)]
        else:
            roots.append(rng.uniform(-rho, rho))
    return np.real(np.poly(roots)) if n else np.ones(1)


def random_matrix_schur(rng, n, m, rho=0.9):
    """Block polynomial with A_0 = I whose companion spectral radius is below rho."""
    A = np.concatenate([np.eye(m)[None], 0.4 * rng.standard_normal((n, m, m))])
    while True:
        F = np.zeros((n * m, n * m))
        for k in range(1, n + 1):
            F[:m, (k - 1) * m:k * m] = -A[k]
        F[m:, :-m] = np.eye((n - 1) * m)
        if np.abs(np.linalg.eigvals(F)).max() < rho:
            return A
        A[1:] *= 0.8


def example_lags():
    """State covariances C_0 = P, C_1 = A P of the two-dimensional example model."""
    P = linalg.solve_discrete_lyapunov(A_SS, np.eye(2))
    return np.stack([P, A_SS @ P])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def vector_example():
    return example_lags()
