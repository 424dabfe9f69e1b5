import numpy as np
import pytest
from scipy import linalg

from crcep.exceptions import DimensionError, NotPositiveDefiniteError
from crcep.spectral_factor import is_schur
from crcep.toeplitz import (
    CovarianceData,
    levinson,
    levinson_whittle,
    reflection_coefficients,
    toeplitz_pd,
)

from conftest import A_SS, example_lags, random_matrix_schur, random_schur


def ar_lags(a, sigma2, n):
    """Lags of the AR process 1/a by a long impulse-response sum (line oracle)."""
    from scipy.signal import lfilter
    h = lfilter([1.0], a, np.eye(1, 4000)[0])
    return np.array([sigma2 * h[k:] @ h[: len(h) - k] for k in range(n + 1)])


class TestCovarianceData:
    def test_block_toeplitz_layout(self, rng):
        C = rng.standard_normal((3, 2, 2))
        C[0] = C[0] + C[0].T
        T = CovarianceData(C).toeplitz()
        assert np.allclose(T[0:2, 2:4], C[1])
        assert np.allclose(T[2:4, 0:2], C[1].T)
        assert np.allclose(T[0:2, 4:6], C[2])
        assert np.allclose(T, T.T)

    def test_bad_shapes(self):
        with pytest.raises(DimensionError):
            CovarianceData(np.zeros((2, 2)))
        with pytest.raises(DimensionError):
            CovarianceData(np.zeros((2, 2, 3)))


class TestToeplitzPd:
    def test_examples(self):
        r = toeplitz_pd([1.0, 0.5])
        assert r.positive_definite and r.min_eigenvalue == pytest.approx(0.5)
        r = toeplitz_pd([1.0, 1.0])
        assert not r.positive_definite and r.min_eigenvalue == pytest.approx(0.0, abs=1e-15)
        r = toeplitz_pd(np.stack([np.eye(2), np.zeros((2, 2))]))
        assert r.positive_definite and r.min_eigenvalue == pytest.approx(1.0)


class TestLevinson:
    def test_examples(self):
        a, s2 = levinson([1.0, 0.5])
        assert np.allclose(a, [1, -0.5]) and s2 == pytest.approx(0.75)
        a, s2 = levinson([1.0, 0.0])
        assert np.allclose(a, [1, 0]) and s2 == 1.0
        a, s2 = levinson([1.0, 0.5, 0.25])
        assert np.allclose(a, [1, -0.5, 0], atol=1e-15) and s2 == pytest.approx(0.75)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            levinson([1.0, 1.0])

    def test_matches_direct_solve(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 11))
            c = ar_lags(random_schur(rng, n, 0.8), rng.uniform(0.5, 2), n)
            a, s2 = levinson(c)
            T = CovarianceData(c).toeplitz()
            assert np.abs(T @ a - s2 * np.eye(n + 1)[0]).max() < 1e-12 * c[0]
            assert is_schur(a)

    def test_reflection_coefficients(self, rng):
        c = ar_lags(random_schur(rng, 4, 0.8), 1.0, 4)
        assert np.all(np.abs(reflection_coefficients(c)) < 1)
        bad = np.array([1.0, 0.9, 0.0])
        assert not toeplitz_pd(bad).positive_definite
        k = reflection_coefficients(bad)
        assert np.any(~(np.abs(k) < 1))


class TestLevinsonWhittle:
    def test_white(self):
        A, D = levinson_whittle(np.stack([np.eye(2), np.zeros((2, 2))]))
        assert np.allclose(A, [np.eye(2), np.zeros((2, 2))])
        assert np.allclose(D, np.eye(2))

    def test_decoupled(self):
        A, D = levinson_whittle(np.stack([np.eye(2), 0.5 * np.eye(2)]))
        assert np.allclose(A[1], -0.5 * np.eye(2))
        assert np.allclose(D, 0.75 * np.eye(2))

    def test_example_residual(self):
        C = example_lags()
        A, D = levinson_whittle(C)
        R = np.concatenate(list(A), axis=1) @ CovarianceData(C).toeplitz()
        assert np.abs(R[:, :2] - D).max() < 1e-10
        assert np.abs(R[:, 2:]).max() < 1e-10
        assert np.allclose(A[1], -A_SS)  # the state is exactly a VAR(1)

    def test_random_blocks(self, rng):
        for _ in range(5):
            n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            A_true = random_matrix_schur(rng, n, m, 0.8)
            # lags of the VAR process via its companion-form Lyapunov equation
            F = np.zeros((n * m, n * m))
            for k in range(1, n + 1):
                F[:m, (k - 1) * m:k * m] = -A_true[k]
            F[m:, :-m] = np.eye((n - 1) * m)
            G = np.zeros((n * m, n * m))
            G[:m, :m] = np.eye(m)
            S = linalg.solve_discrete_lyapunov(F, G)
            lags = [S[:m, :m]]
            for k in range(1, n + 1):
                lags.append(S[:m, :m] if k == 0 else (np.linalg.matrix_power(F, k) @ S)[:m, :m])
            A, D = levinson_whittle(np.stack(lags))
            assert np.allclose(A, A_true, atol=1e-8)
            assert np.allclose(D, np.eye(m), atol=1e-8)

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            levinson_whittle(np.stack([np.eye(2), np.eye(2)]))
