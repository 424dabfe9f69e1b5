import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from crcep.estimators import (
    LineCovarianceExtension,
    PeriodicCovarianceExtension,
    PeriodicSmoother,
    VectorCovarianceExtension,
)
from crcep.line import line_lags
from crcep.periodic import model_lags
from crcep.smoother import SmoothingProblem, direct_smooth_oracle

from conftest import C_OBS


def test_periodic_fit():
    c = model_lags([1.0, -0.6], [1.0, 0.3], 16, 1.5)
    est = PeriodicCovarianceExtension(N=16, b=[1.0, 0.3]).fit(c)
    assert np.allclose(est.a_, [1.0, -0.6]) and est.sigma2_ == pytest.approx(1.5)
    assert est.score(c) > -1e-8
    assert est.spectrum().shape == (32,)
    assert est.sample(random_state=0).shape == (32,)
    assert est.n_iter_ == est.report_.iterations


def test_periodic_default_b_is_max_entropy():
    est = PeriodicCovarianceExtension(N=8).fit([1.0, 0.5])
    assert np.abs(est.covariances() - [1.0, 0.5]).max() < 1e-8


def test_params_and_clone():
    est = PeriodicCovarianceExtension(N=8, tol=1e-9, max_iter=50)
    params = est.get_params()
    assert params["N"] == 8 and params["max_iter"] == 50
    other = clone(est).set_params(N=16)
    assert other.N == 16 and est.N == 8


def test_not_fitted():
    with pytest.raises(NotFittedError):
        PeriodicCovarianceExtension().covariances()


def test_validation():
    with pytest.raises(ValueError):
        PeriodicCovarianceExtension(N=1).fit([1.0, 0.5])
    with pytest.raises(ValueError):
        PeriodicCovarianceExtension(N=8, b=[1.0]).fit([1.0, 0.5])
    with pytest.raises(ValueError):
        PeriodicCovarianceExtension(N=8).fit([1.0, np.nan])


def test_line_fit():
    c = line_lags([1.0, -0.5], [1.0, 0.4], 1.0)
    est = LineCovarianceExtension(b=[1.0, 0.4]).fit(c)
    assert np.allclose(est.a_, [1.0, -0.5], atol=1e-7)
    assert est.score(c) > -1e-7


def test_vector_fit(vector_example):
    est = VectorCovarianceExtension(N=25, b=[1.0, 0.5]).fit(vector_example)
    assert np.abs(est.A_[1] - [[-0.8609, 0.2989], [-0.2989, -0.8609]]).max() < 1e-3
    assert est.score(vector_example) > -1e-6
    assert est.sample(random_state=1).shape == (50, 2)
    with pytest.raises(ValueError):
        VectorCovarianceExtension(N=25).fit(np.ones((2, 2, 3)))


def test_smoother_transform(vector_example, rng):
    y = rng.standard_normal((50, 2))
    sm = PeriodicSmoother(C=C_OBS, R=np.eye(2), N=25, b=[1.0, 0.5]).fit(vector_example)
    x = sm.transform(y)
    ref = direct_smooth_oracle(SmoothingProblem(sm.prior_, sm.channel_, y))
    assert np.abs(x - ref).max() < 1e-8 * np.abs(ref).max()


def test_smoother_needs_channel(vector_example):
    with pytest.raises(ValueError):
        PeriodicSmoother(N=25).fit(vector_example)
    with pytest.raises(ValueError):
        PeriodicSmoother(C=np.ones((2, 3)), R=np.eye(2), N=25, b=[1, 0.5]).fit(vector_example)
