import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lagcausal import CausalDiscovery, DiscoveryConfig, discover
from lagcausal.constraints import is_dag, softmax_columns
from lagcausal.datagen import GenConfig, generate_dataset
from lagcausal.model import forward_all


@pytest.fixture(scope="module")
def data():
    ds, graph = generate_dataset(GenConfig(n=3, d=1, T=60, seed=4))
    return ds.values.T, graph


FAST = dict(epochs=60, max_lag_hint=2)


def test_params_round_trip():
    est = CausalDiscovery(epochs=5, threshold=0.5, random_state=3)
    params = est.get_params()
    assert params["epochs"] == 5 and params["random_state"] == 3
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(lr=0.05)
    assert twin.lr == 0.05 and est.lr == 0.01


def test_default_params_match_config():
    cfg = CausalDiscovery().to_config()
    assert cfg == DiscoveryConfig()


def test_fit_matches_functional_api(data):
    X, _ = data
    est = CausalDiscovery(**FAST).fit(X)
    graph, attention, _ = discover(X.T, DiscoveryConfig(**FAST))
    assert est.graph_ == graph
    np.testing.assert_array_equal(est.attention_, softmax_columns(attention))
    assert est.adjacency_.shape == (3, 3) and is_dag(est.adjacency_)
    assert est.n_features_in_ == 3 and len(est.traces_) == 1


def test_predict_shape_and_units(data):
    X, _ = data
    est = CausalDiscovery(**FAST, standardize=True).fit(X * 100 + 5)
    pred = est.predict(X * 100 + 5)
    assert pred.shape == X.shape
    # predictions come back in the caller's units
    assert abs(np.mean(pred[10:]) - np.mean(X[10:] * 100 + 5)) < 50
    assert est.score(X * 100 + 5) <= 0


def test_predict_averages_restarts(data):
    X, _ = data
    est = CausalDiscovery(epochs=10, max_lag_hint=2, n_restarts=2).fit(X)
    assert len(est.models_) == 2
    scaled = X.T
    expected = np.mean([forward_all(m, scaled) for m in est.models_], axis=0).T
    np.testing.assert_allclose(est.predict(X), expected, atol=1e-12)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        CausalDiscovery().predict(np.zeros((20, 2)))


@pytest.mark.parametrize("X", [np.zeros(10), np.full((20, 2), np.nan), np.zeros((20, 1))])
def test_input_validation(X):
    with pytest.raises(ValueError):
        CausalDiscovery(epochs=1, max_lag_hint=2).fit(X)


def test_feature_mismatch(data):
    X, _ = data
    est = CausalDiscovery(epochs=2, max_lag_hint=2).fit(X)
    with pytest.raises(ValueError, match="3"):
        est.predict(X[:, :2])
