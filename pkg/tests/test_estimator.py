import numpy as np
import pytest
from sklearn.base import clone

from cellopt import WorkcellOptimizer
from cellopt.estimator import check_spec, from_vector, to_vector
from cellopt.feasibility import sample


def small(**kw):
    params = dict(n_iterations=2, baseline_samples=20, random_state=3)
    params.update(kw)
    return WorkcellOptimizer(**params)


def test_params_and_clone():
    est = small(temperature=5.0)
    params = est.get_params()
    assert params["temperature"] == 5.0 and params["crossover"] == "inherit"
    c = clone(est)
    assert c.get_params() == params
    c.set_params(n_children=8)
    assert c.n_children == 8 and est.n_children == 6


def test_vector_round_trip(estop):
    x = sample(estop, np.random.default_rng(0))
    v = to_vector(estop, x)
    assert v.shape == (28,)
    assert from_vector(estop, v) == x
    bad = v.copy()
    bad[-1] = 0.5
    with pytest.raises(ValueError):
        from_vector(estop, bad)


def test_check_spec_alias(estop):
    assert check_spec("@estop").n_ops == estop.n_ops


def test_fit_predict(estop):
    est = small().fit(estop)
    assert est.n_evaluations_ == 4 + 2 * 6
    assert est.best_fitness_ == min(h["best_f"] for h in est.history_)
    f = est.predict([est.best_chromosome_])
    assert f[0] == est.best_fitness_
    X = np.vstack([to_vector(estop, est.best_chromosome_)] * 2)
    assert np.array_equal(est.predict(X), [est.best_fitness_] * 2)
    assert est.transform(X).shape == (2, 4)
    assert est.score([est.best_chromosome_]) == -est.best_fitness_


def test_fit_is_reproducible(estop):
    a = small().fit(estop)
    b = clone(a).fit(estop)
    assert a.best_chromosome_ == b.best_chromosome_


def test_unfitted_predict_raises(estop):
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        small().predict([sample(estop, np.random.default_rng(0))])
