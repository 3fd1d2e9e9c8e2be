import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mlorder.estimators import OrderEstimator, PskhuOrderEstimator, SubdiffusionForward
from mlorder.exceptions import DomainError
from mlorder.inverse import Status, pskhu_forward
from mlorder.monotonicity import threshold_increasing
from mlorder.spectral import InitialField, SpectralDomain, forward_eval, solve_forward

DOM = SpectralDomain.interval(1.0, 10)
COEF = [0.8, 0.1, 0.05]


def test_forward_matches_library():
    est = SubdiffusionForward(DOM, COEF, rho=0.6).fit()
    X = np.array([[0.3, 0.1], [0.7, 1.0]])
    sol = solve_forward(DOM, InitialField.given(COEF), 0.6)
    expect = [forward_eval(sol, 0.3, 0.1), forward_eval(sol, 0.7, 1.0)]
    np.testing.assert_allclose(est.predict(X), expect, rtol=1e-14)


def test_forward_params_and_clone():
    est = SubdiffusionForward(DOM, COEF, rho=0.6, kind="rl")
    p = est.get_params()
    assert p["rho"] == 0.6 and p["kind"] == "rl" and p["n_modes"] is None
    c = clone(est).set_params(rho=0.9)
    assert c.rho == 0.9 and est.rho == 0.6


def test_forward_not_fitted():
    with pytest.raises(NotFittedError):
        SubdiffusionForward(DOM, COEF).predict([[0.3, 0.1]])


def test_forward_validation():
    est = SubdiffusionForward(DOM, COEF).fit()
    with pytest.raises(DomainError):
        est.predict([[0.3, 0.1, 0.2]])
    with pytest.raises(ValueError):
        est.predict([[0.3, np.nan]])
    with pytest.raises(DomainError):
        SubdiffusionForward().fit()


def test_order_round_trip():
    rho0, x0 = 0.3, 0.3
    t0 = threshold_increasing(rho0) * 0.5
    d0 = SubdiffusionForward(DOM, COEF, rho=0.75).fit().predict([[x0, t0]])
    est = OrderEstimator(DOM, COEF, rho0=rho0).fit([[x0, t0]], d0)
    assert est.is_unique_ and est.status_ is Status.Unique
    assert abs(est.rho_ - 0.75) <= 1e-6


def test_order_rejects_batches():
    est = OrderEstimator(DOM, COEF, rho0=0.3)
    with pytest.raises(DomainError):
        est.fit([[0.3, 0.01], [0.4, 0.01]], [1.0, 1.0])
    with pytest.raises(DomainError):
        est.fit([[0.3, 0.2, 0.01]], [1.0])


def test_order_not_fitted():
    with pytest.raises(NotFittedError):
        OrderEstimator(DOM, COEF).is_unique_


def test_pskhu_round_trip():
    u0 = pskhu_forward(0.4, 1.0, -1.0, 0.1)
    est = PskhuOrderEstimator(rho0=0.3).fit([[1.0, -1.0, 0.1]], [u0])
    # the map is not monotone here, so a second root is reported alongside the true order
    assert est.status_ is Status.HypothesesUnverified
    assert est.rho_ == pytest.approx(0.4, abs=1e-8)
    assert len(est.result_.candidates) == 2
    assert clone(est).get_params() == {"rho0": 0.3, "tol": 1e-12}


def test_pskhu_shape():
    with pytest.raises(DomainError):
        PskhuOrderEstimator().fit([[1.0, 0.5]], [1.0])
