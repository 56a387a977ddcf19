import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from srcond import SymbolicRegressor


def _data():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (40, 2))
    return X, 1.5 * X[:, 0] * X[:, 1] + 0.3


def test_fit_predict():
    X, y = _data()
    est = SymbolicRegressor(population_size=30, generations=5, max_size=15, random_state=1)
    assert est.fit(X, y) is est
    pred = est.predict(X)
    assert pred.shape == (40,)
    assert est.score(X, y) > 0.5
    assert est.n_features_in_ == 2
    assert isinstance(est.expression_, str)
    assert len(est.history_) == 5
    assert len(est.log_.generations) == 5


def test_params_and_clone():
    est = SymbolicRegressor(max_size=20, function_set="large")
    params = est.get_params()
    assert params["max_size"] == 20 and params["function_set"] == "large"
    other = clone(est).set_params(max_size=30)
    assert other.max_size == 30 and est.max_size == 20


def test_reproducible():
    X, y = _data()
    a = SymbolicRegressor(population_size=15, generations=3, max_size=10, random_state=4).fit(X, y)
    b = SymbolicRegressor(population_size=15, generations=3, max_size=10, random_state=4).fit(X, y)
    np.testing.assert_array_equal(a.predict(X), b.predict(X))


def test_validation():
    X, y = _data()
    est = SymbolicRegressor(population_size=10, generations=1, max_size=7)
    with pytest.raises(NotFittedError):
        est.predict(X)
    with pytest.raises(ValueError):
        est.fit(X, y[:-1])
    with pytest.raises(ValueError):
        est.fit(np.full_like(X, np.nan), y)
    with pytest.raises(ValueError):
        SymbolicRegressor(function_set="tiny").fit(X, y)
    est.fit(X, y)
    with pytest.raises(ValueError):
        est.predict(X[:, :1])
