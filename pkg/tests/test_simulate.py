import numpy as np
import pytest

from crcep.periodic import PeriodicArmaModel
from crcep.simulate import sample_lags, simulate_periodic, simulate_state_space
from crcep.smoother import StateSpaceModel, lyapunov_lags
from crcep.vector import VectorPeriodicArmaModel

from conftest import A_SS, C_OBS


def test_scalar_shape_and_determinism():
    model = PeriodicArmaModel([1.0, -0.5], [1.0, 0.3], 2.0, 16)
    y1 = simulate_periodic(model, 3)
    assert y1.shape == (32,) and np.isrealobj(y1)
    assert np.array_equal(y1, simulate_periodic(model, 3))


def test_scalar_covariance():
    model = PeriodicArmaModel([1.0, -0.5], [1.0, 0.3], 2.0, 16)
    rng = np.random.default_rng(0)
    est = np.mean([sample_lags(simulate_periodic(model, rng), 1) for _ in range(4000)], axis=0)
    assert np.allclose(est, model.covariances(), rtol=0.05)


def test_vector_covariance():
    A = np.stack([np.eye(2), -0.5 * A_SS])
    model = VectorPeriodicArmaModel(A, [1.0, 0.5], np.diag([1.0, 2.0]), 16)
    rng = np.random.default_rng(1)
    y = simulate_periodic(model, rng)
    assert y.shape == (32, 2)
    est = np.mean([sample_lags(simulate_periodic(model, rng), 1) for _ in range(4000)], axis=0)
    assert np.abs(est - model.covariances()).max() < 0.05 * np.abs(model.covariances()).max()


def test_unsupported_model():
    with pytest.raises(TypeError):
        simulate_periodic(object())


def test_state_space_stationary():
    ss = StateSpaceModel(A_SS, C_OBS, np.eye(2), np.eye(2))
    x, y = simulate_state_space(ss, 200000, 5)
    assert x.shape == (200000, 2) and y.shape == (200000, 2)
    lags = lyapunov_lags(ss, 1).lags
    est = sample_lags(x, 1, periodic=False)
    assert np.abs(est - lags).max() < 0.1 * np.abs(lags).max()


def test_sample_lags():
    y = np.array([1.0, -1.0, 1.0, -1.0])
    assert np.allclose(sample_lags(y, 2), [1.0, -1.0, 1.0])
    assert np.allclose(sample_lags(y, 1, periodic=False), [1.0, -0.75])
    with pytest.raises(ValueError):
        sample_lags(y, 4)
