import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from arreplay import PolicyComparison
from arreplay.env import BanditInstance
from arreplay.policies import UCB1, TSBernoulli

INST = BanditInstance.bernoulli([0.7, 0.3])


def test_params_and_clone():
    est = PolicyComparison(UCB1(2.0), TSBernoulli(), horizon=100, n_runs=50)
    params = est.get_params()
    assert params["horizon"] == 100 and params["design"] == "ar"
    twin = clone(est).set_params(horizon=200)
    assert twin.horizon == 200 and est.horizon == 100


def test_fit_attributes():
    est = PolicyComparison({"kind": "ucb1", "alpha": 2.0}, {"kind": "ts_bernoulli"},
                           horizon=200, n_runs=100).fit(INST)
    assert est.theta_samples_.shape == (100,)
    lo, hi = est.ci_
    assert lo <= est.theta_ <= hi
    assert 200 <= est.n_env_mean_ <= 400
    assert est.predict() in (-1, 0, 1)
    wide = est.confidence_interval(0.001)
    assert wide[0] <= lo and wide[1] >= hi


def test_validation():
    with pytest.raises(NotFittedError):
        PolicyComparison(UCB1(), UCB1()).predict()
    with pytest.raises(ValueError, match="design"):
        PolicyComparison(UCB1(), UCB1(), design="nope").fit(INST)
    with pytest.raises(ValueError, match="n_runs"):
        PolicyComparison(UCB1(), UCB1(), n_runs=1).fit(INST)
    with pytest.raises(TypeError):
        PolicyComparison(UCB1(), UCB1()).fit([0.5, 0.5])
