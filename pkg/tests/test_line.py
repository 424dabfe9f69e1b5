import numpy as np
import pytest
from scipy import linalg

from crcep.exceptions import DegenerateScalingError, DimensionError, NotPositiveDefiniteError
from crcep.line import (
    LineArmaModel,
    hankel_b,
    impulse_head,
    iterate_line,
    line_gradient,
    line_lags,
    line_objective,
    sigma_sq_line,
    solve_line,
)
from crcep.toeplitz import CovarianceData

from conftest import random_schur

AR1 = np.array([4 / 3, 2 / 3])


def fd_gradient(f, x, h=1e-6):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


class TestImpulseHead:
    def test_examples(self):
        assert np.allclose(impulse_head([1, 0], [1, 0]), [1, 0])
        assert np.allclose(impulse_head([1, -0.5], [1, 0]), [1, 0.5])
        assert np.allclose(impulse_head([2, 0], [1, 1]), [0.5, 0.5])

    def test_singular(self):
        with pytest.raises(ZeroDivisionError):
            impulse_head([0.0, 1.0], [1.0, 0.0])

    def test_matches_filter(self, rng):
        a, b = random_schur(rng, 3), random_schur(rng, 3)
        model = LineArmaModel(a, b, 1.0)
        assert np.allclose(impulse_head(a, b), model.impulse_response(4))

    def test_hankel(self):
        assert np.array_equal(hankel_b([1, 2, 3]), [[1, 2, 3], [2, 3, 0], [3, 0, 0]])


class TestLineLags:
    def test_ar1_closed_form(self):
        assert np.allclose(line_lags([1, -0.5], [1, 0], 1.0, 4),
                           [4 / 3 * 0.5 ** k for k in range(5)], atol=1e-12)

    def test_ma1(self):
        assert np.allclose(line_lags([1, 0], [1, 0.5], 2.0), [2.5, 1.0], atol=1e-12)


class TestSigmaSqLine:
    def test_degenerate_example(self):
        assert sigma_sq_line([1, -0.5], [1, 1], [1, 0.5], strict=False) == pytest.approx(0.0)
        with pytest.raises(DegenerateScalingError):
            sigma_sq_line([1, -0.5], [1, 1], [1, 0.5])

    def test_bn_zero_branch(self):
        # b_n = 0 uses the full system; at the AR(1) truth this gives sigma2 = 1
        assert sigma_sq_line([1, -0.5], [1, 0], AR1) == pytest.approx(1.0)

    def test_branches_agree_at_fixed_point(self):
        a, b = np.array([1, -0.5]), np.array([1, 0.4])
        c = line_lags(a, b, 1.5)
        assert sigma_sq_line(a, b, c) == pytest.approx(1.5, rel=1e-9)
        assert sigma_sq_line(a, b, c, method="lstsq") == pytest.approx(1.5, rel=1e-9)

    def test_bad_method(self):
        with pytest.raises(ValueError):
            sigma_sq_line([1, 0], [1, 0], [1, 0], method="x")


class TestIterateLine:
    def test_white_fixed_point(self):
        assert np.allclose(iterate_line([1, 0], [1, 0], [1, 0]), [1, 0])

    def test_ar1_fixed_point(self):
        a = iterate_line([1, -0.5], [1, 0], AR1)
        assert np.abs(a - [1, -0.5]).max() < 1e-10

    def test_quasi_newton(self, rng):
        b = random_schur(rng, 2, 0.5)
        c = line_lags(random_schur(rng, 2, 0.7), b, 1.0)
        T = CovarianceData(c).toeplitz()
        for _ in range(5):
            x = random_schur(rng, 2, 0.6)
            fd = fd_gradient(lambda y: line_objective(y, b, c), x)
            assert np.abs(fd - line_gradient(x, b, c)).max() < 1e-6
            expect = x - 0.5 * linalg.solve(T, line_gradient(x, b, c))
            assert np.abs(iterate_line(x, b, c, sigma2=1.0) - expect).max() < 1e-12


class TestSolveLine:
    def test_white(self):
        model, report = solve_line([1.0, 0.0], [1.0, 0.0])
        assert np.allclose(model.a, [1, 0]) and report.iterations == 0

    def test_ar1(self):
        model, report = solve_line(AR1, [1.0, 0.0])
        assert np.abs(model.a - [1, -0.5]).max() < 1e-8
        assert model.sigma2 == pytest.approx(1.0, rel=1e-8)

    def test_arma11_round_trip(self):
        a, b = np.array([1.0, -0.7]), np.array([1.0, 0.5])
        c = line_lags(a, b, 1.3)
        model, report = solve_line(c, b)
        assert np.abs(model.a - a).max() < 1e-6
        assert model.sigma2 == pytest.approx(1.3, rel=1e-6)
        assert np.abs(model.covariances() - c).max() < 1e-7

    def test_random_round_trip(self, rng):
        for n in (2, 3):
            a, b = random_schur(rng, n, 0.8), random_schur(rng, n, 0.6)
            c = line_lags(a, b, 1.0)
            model, report = solve_line(c, b)
            assert np.abs(model.a - a).max() < 1e-6
            unit = model.a / np.sqrt(model.sigma2)
            fd = fd_gradient(lambda y: line_objective(y, b, c), unit)
            assert np.linalg.norm(fd) < 1e-6

    def test_n_zero(self):
        model, _ = solve_line([2.0], [1.0])
        assert model.sigma2 == 2.0

    def test_errors(self):
        with pytest.raises(DimensionError):
            solve_line([1.0, 0.5], [1.0])
        with pytest.raises(NotPositiveDefiniteError):
            solve_line([1.0, 1.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            solve_line([1.0, 0.5], [1.0, 2.0])

    def test_model_validation(self):
        with pytest.raises(ValueError):
            LineArmaModel([1.0, 0.0], [1.0, 0.0], 0.0)
