import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from proxlr import DimensionError, FactoredSubgradient, NuclearDCA, \
    ProjectedVariableSmoothing, SpectralSet, make_instance

ESTIMATORS = [
    ProjectedVariableSmoothing(rank=2, loss="l1", max_time=5),
    FactoredSubgradient(rank=2, max_time=5),
    NuclearDCA(max_time=3),
]


@pytest.fixture(scope="module")
def data():
    obs, truth = make_instance(10, 12, 2, 0.9, 0.0, seed=1)
    return obs, truth


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_params_round_trip(est):
    params = est.get_params()
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(max_time=1.0)
    assert twin.max_time == 1.0 and est.max_time != 1.0


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_fit_predict(est, data):
    obs, truth = data
    est = clone(est).fit(obs.operator.mats, obs.y)
    assert est.coef_.shape == (10, 12)
    assert est.n_iter_ >= 1 and est.termination_reason_
    pred = est.predict(obs.operator)
    np.testing.assert_allclose(pred, obs.operator.forward(est.coef_))
    assert est.score(obs.operator.mats, obs.y) > 0.9
    assert est.cost(obs.operator, obs.y) >= 0


def test_unfitted_predict_raises(data):
    obs, _ = data
    with pytest.raises(NotFittedError):
        ProjectedVariableSmoothing().predict(obs.operator)


def test_shape_checks(data):
    obs, _ = data
    with pytest.raises(DimensionError):
        ProjectedVariableSmoothing(rank=2).fit(obs.operator, obs.y[:-1])
    est = FactoredSubgradient(rank=2, max_iter=3).fit(obs.operator, obs.y)
    with pytest.raises(DimensionError):
        est.predict(np.zeros((4, 12, 10)))


def test_warm_start_at_truth():
    obs, truth = make_instance(8, 6, 2, 0.9, 0.0, noise_var=0.0, seed=5)
    est = ProjectedVariableSmoothing(rank=2, sigma=0.1, loss="l1")
    est.fit(obs.operator, obs.y, x_init=truth.x_star)
    np.testing.assert_allclose(est.coef_, truth.x_star, atol=1e-12)


def test_proposed_l1_recovers_outlier_free(data):
    obs, truth = data
    est = ProjectedVariableSmoothing(rank=2, loss="l1", max_time=10).fit(obs.operator, obs.y)
    assert np.linalg.norm(est.coef_ - truth.x_star) / np.sqrt(120) < 1e-3


def test_proposed_scad_refines_nearby_start():
    obs, truth = make_instance(10, 12, 2, 0.9, 0.2, seed=1)
    rng = np.random.default_rng(0)
    start = truth.x_star + 0.02 * rng.standard_normal(truth.x_star.shape)
    est = ProjectedVariableSmoothing(rank=2, loss="scad:2.5", max_time=10)
    est.fit(obs.operator, obs.y, x_init=SpectralSet(2, 1.0, 10, 12).project(start))
    assert np.linalg.norm(est.coef_ - truth.x_star) / np.sqrt(120) < 1e-3
