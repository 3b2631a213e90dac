import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from jumpcontrol.estimators import HarvestValueEstimator, IPOValueEstimator
from jumpcontrol.harvest import eval_harvest_value
from jumpcontrol.ipo import eval_ipo_derivatives, eval_ipo_value


def test_ipo_fit_predict(ipo_a1):
    est = IPOValueEstimator(a=1.0).fit()
    assert est.boundary_ == ipo_a1.b
    x = np.linspace(0, 8, 17)
    np.testing.assert_array_equal(est.predict(x.reshape(-1, 1)), eval_ipo_value(ipo_a1, x))
    np.testing.assert_array_equal(est.predict(x), eval_ipo_value(ipo_a1, x))


def test_ipo_transform_columns(ipo_a1):
    x = np.array([0.5, 2.0, 6.0])
    t = IPOValueEstimator(a=1.0).fit_transform(x.reshape(-1, 1))
    d1, d2 = eval_ipo_derivatives(ipo_a1, x)
    np.testing.assert_array_equal(t, np.column_stack([eval_ipo_value(ipo_a1, x), d1, d2]))


def test_harvest(harvest):
    est = HarvestValueEstimator().fit()
    assert est.boundary_ == harvest.b
    assert est.predict([[0.8]])[0] == eval_harvest_value(harvest, 0.8)
    assert est.transform([[harvest.b + 1]])[0, 1] == pytest.approx(1.0)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        IPOValueEstimator().predict([[1.0]])


def test_shape_checks():
    est = HarvestValueEstimator().fit()
    with pytest.raises(ValueError, match="single feature"):
        est.predict(np.ones((3, 2)))
    with pytest.raises(ValueError):
        est.predict([[np.nan]])


def test_clone_and_set_params():
    est = IPOValueEstimator(eta=2.0)
    copy = clone(est).set_params(eta=1.0)
    assert est.get_params()["eta"] == 2.0 and copy.get_params()["eta"] == 1.0
    # smaller eta means larger jumps, so the boundary moves up
    assert copy.fit().boundary_ > est.fit().boundary_
