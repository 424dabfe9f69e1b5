import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crcep.dft import BandedCirculant, polynomial_on_circle
from crcep.exceptions import FactorizationError, InfeasibleAtNError
from crcep.spectral_factor import (
    PseudoPolynomial,
    coefficient_jacobian,
    coefficient_match_check,
    is_positive_circle,
    is_positive_discrete,
    is_schur,
    matrix_schur_factor,
    polynomial_roots,
    schur_factor,
)

from conftest import random_matrix_schur, random_schur

# (cos(theta) - cos(pi/8))^2 - 0.003: negative around theta = +-pi/8, which
# lies halfway between nodes of the 8-point circle, positive at every node
_c = np.cos(np.pi / 8)
DIP = np.array([0.5 + _c ** 2 - 0.003, -_c, 0.25])


class TestPositivity:
    def test_discrete_examples(self):
        r = is_positive_discrete([2.5, 1.0], 8)
        assert r and r.min_value == pytest.approx(0.5) and r.argmin_node == 8
        r = is_positive_discrete([1.0, 1.0], 8)
        assert not r and r.min_value == pytest.approx(-1.0)
        r = is_positive_discrete([1.0], 8)
        assert r and r.min_value == 1.0

    def test_circle_examples(self):
        assert is_positive_circle([2.5, 1.0])
        assert not is_positive_circle([1.0, 1.0])
        assert not is_positive_circle([2.0, 1.0])

    def test_positive_on_nodes_only(self):
        assert is_positive_discrete(DIP, 4)
        assert not is_positive_circle(DIP)

    def test_matrix(self):
        Q = np.array([2.5 * np.eye(2), np.eye(2)])
        assert is_positive_circle(Q)
        assert is_positive_discrete(Q, 4)
        assert not is_positive_circle(np.array([np.eye(2), np.eye(2)]))


class TestCoefficientMatch:
    def test_examples(self):
        assert np.allclose(coefficient_match_check([1.0]), [1.0])
        assert np.allclose(coefficient_match_check([1.0, 0.5]), [1.25, 0.5])
        assert np.allclose(coefficient_match_check([np.sqrt(2), 1 / np.sqrt(2)]), [2.5, 1.0])

    def test_jacobian_finite_difference(self, rng):
        a = rng.standard_normal(4)
        J = coefficient_jacobian(a)
        h = 1e-6
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd = (coefficient_match_check(a + e) - coefficient_match_check(a - e)) / (2 * h)
            assert np.allclose(J[:, j], fd, atol=1e-8)

    def test_conventions(self, rng):
        A = rng.standard_normal((3, 2, 2))
        left = coefficient_match_check(A, "left")
        right = coefficient_match_check(A, "right")
        N = 6
        Az = polynomial_on_circle(A, N)
        AzH = np.conj(np.swapaxes(Az, -1, -2))
        Lz = PseudoPolynomial(left).on_circle(N)
        Rz = PseudoPolynomial(right).on_circle(N)
        assert np.allclose(Lz, Az @ AzH)
        assert np.allclose(Rz, AzH @ Az)


class TestSchurFactor:
    def test_examples(self):
        assert np.allclose(schur_factor([2.5, 1.0]).coeffs, [np.sqrt(2), 1 / np.sqrt(2)])
        assert np.allclose(schur_factor([1.0]).coeffs, [1.0])
        assert np.allclose(schur_factor([4.0]).coeffs, [2.0])

    def test_not_positive(self):
        with pytest.raises(FactorizationError):
            schur_factor([1.0, 1.0])

    def test_infeasible_at_N(self):
        with pytest.raises(InfeasibleAtNError) as err:
            schur_factor(DIP, N=4)
        assert err.value.N == 4
        assert "N = 8" in str(err.value)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 6), st.integers(0, 2 ** 32 - 1))
    def test_roundtrip(self, n, seed):
        rng = np.random.default_rng(seed)
        a_true = random_schur(rng, n, 0.95) * rng.uniform(0.5, 2.0)
        p = coefficient_match_check(a_true)
        a = schur_factor(p).coeffs
        assert np.abs(coefficient_match_check(a) - p).max() <= 1e-10 * np.abs(p).max()
        assert a[0] > 0
        assert np.all(np.abs(polynomial_roots(a)) < 1)
        assert np.allclose(a, a_true * np.sign(a_true[0]), atol=1e-8)

    def test_discrete_circle_consistency(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 5))
            p = coefficient_match_check(random_schur(rng, n))
            a = schur_factor(p).coeffs
            for N in (8, 16, 32):
                az = polynomial_on_circle(a, N)
                assert np.allclose(np.abs(az) ** 2, PseudoPolynomial(p).on_circle(N).real,
                                   atol=1e-12)

    def test_circulant_corollary(self, rng):
        p = coefficient_match_check(random_schur(rng, 2))
        a = schur_factor(p).coeffs
        for N in (3, 5, 8):
            M = BandedCirculant.symmetric(p, N).to_dense()
            V = BandedCirculant.lower(a, N).to_dense()
            assert np.allclose(M, V @ V.T, atol=1e-10)


class TestMatrixSchurFactor:
    def test_identity(self):
        A = matrix_schur_factor(np.eye(2)[None]).coeffs
        assert np.allclose(A, np.eye(2)[None])

    def test_diagonal(self):
        A = matrix_schur_factor(np.diag([4.0, 9.0])[None]).coeffs
        assert np.allclose(A[0], np.diag([2.0, 3.0]))

    def test_lifted_scalar(self):
        A = matrix_schur_factor(np.array([2.5 * np.eye(2), np.eye(2)])).coeffs
        assert np.allclose(A[0], np.sqrt(2) * np.eye(2))
        assert np.allclose(A[1], np.eye(2) / np.sqrt(2))

    @pytest.mark.parametrize("convention", ["left", "right"])
    def test_roundtrip(self, rng, convention):
        for _ in range(5):
            n, m = int(rng.integers(1, 3)), int(rng.integers(1, 4))
            A_true = random_matrix_schur(rng, n, m)
            Q = coefficient_match_check(A_true, convention)
            A = matrix_schur_factor(Q, convention).coeffs
            assert np.abs(coefficient_match_check(A, convention) - Q).max() < 1e-8
            assert is_schur(A)
            assert np.allclose(A[0], np.tril(A[0]))
            assert np.all(np.diag(A[0]) > 0)

    def test_not_positive(self):
        with pytest.raises(FactorizationError):
            matrix_schur_factor(np.array([np.eye(2), np.eye(2)]))
