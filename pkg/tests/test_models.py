import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from oracles import central_difference, knn_neighbors, weighted_stump_error
from wcforecast import models
from wcforecast.errors import FitError
from wcforecast.models import FAMILIES, REGISTRY, ClassifierSpec
from wcforecast.models.boosting import (
    ADABOOST_EPS_FLOOR,
    AdaBoost,
    leaf_gradient,
    leaf_hessian,
    leaf_objective,
    newton_leaf_value,
)
from wcforecast.models.knn import KNearestNeighbors
from wcforecast.models.logistic import LogisticRegression, logistic_gradient, logistic_loss
from wcforecast.models.tree import Presorted, build_tree


def toy_data(rng, n=120, d=4):
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.5 * X[:, 1] + 0.3 * rng.normal(size=n) > 0).astype(int)
    return X, y


@pytest.mark.parametrize("family", FAMILIES)
def test_probabilities_are_valid(family, rng):
    X, y = toy_data(rng)
    model = models.fit(ClassifierSpec(family, {}, 3), X, y)
    P = model.predict_proba(rng.normal(size=(30, 4)))
    assert P.shape == (30, 2)
    assert np.all((P >= 0) & (P <= 1))
    assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
    assert (model.predict_proba(X)[:, 0] > 0.5).astype(int).tolist().count(1) > 0


@pytest.mark.parametrize("family", FAMILIES)
def test_fit_is_deterministic_and_restorable(family, rng):
    X, y = toy_data(rng)
    a = models.fit(ClassifierSpec(family, {}, 11), X, y)
    b = models.fit(ClassifierSpec(family, {}, 11), X, y)
    Q = rng.normal(size=(20, 4))
    assert_array_equal(a.predict_proba(Q), b.predict_proba(Q))
    c = models.restore(family, 11, a.params, a.n_features, a.get_state())
    assert_array_equal(a.predict_proba(Q), c.predict_proba(Q))


@pytest.mark.parametrize("family", [f for f in FAMILIES if REGISTRY[f].needs_both_classes])
def test_single_class_rejected(family):
    X = np.arange(10.0).reshape(5, 2)
    with pytest.raises(FitError):
        models.fit(ClassifierSpec(family), X, np.ones(5, dtype=int))


def test_dimension_checks(rng):
    X, y = toy_data(rng)
    model = models.fit(ClassifierSpec("logistic"), X, y)
    with pytest.raises(ValueError):
        model.predict_proba(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        models.fit(ClassifierSpec("logistic"), np.zeros((4, 0)), np.array([0, 1, 0, 1]))
    with pytest.raises(ValueError):
        models.make_classifier(ClassifierSpec("logistic", {"depth": 3}))
    with pytest.raises(ValueError):
        models.make_classifier(ClassifierSpec("svm"))
    assert models.predict_proba(model, X[0]) == tuple(model.predict_proba(X[:1])[0])


def test_logistic_gradient_finite_differences(rng):
    for _ in range(20):
        n, d = int(rng.integers(3, 15)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, n).astype(float)
        theta = rng.normal(size=d + 1)
        l2 = float(rng.uniform(0, 1))
        gw, gb = logistic_gradient(theta[:d], theta[d], X, y, l2)
        num = central_difference(lambda t: logistic_loss(t[:d], t[d], X, y, l2), theta)
        assert_allclose(np.append(gw, gb), num, rtol=1e-6, atol=1e-8)


def test_logistic_converges_to_stationary_point(rng):
    X, y = toy_data(rng)
    m = LogisticRegression(0, l2=0.1).fit(X, y)
    gw, gb = logistic_gradient(m.coef_, m.intercept_, X, y.astype(float), 0.1)
    assert max(np.abs(gw).max(), abs(gb)) < 1e-6
    assert m.n_iter_ < 5000


def test_logistic_separable_data_stays_finite():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    m = LogisticRegression(0, l2=0.0, max_iter=2000).fit(X, y)
    assert np.all(np.isfinite(m.coef_))
    assert m.predict_proba(X)[:, 0].round().tolist() == [0, 0, 1, 1]


def test_gb_leaf_objective_derivatives(rng):
    for _ in range(20):
        F = rng.normal(size=8)
        y = rng.integers(0, 2, 8).astype(float)
        g = float(rng.normal())
        num_grad = central_difference(lambda v: leaf_objective(v[0], F, y), [g])[0]
        num_hess = central_difference(lambda v: leaf_gradient(v[0], F, y), [g])[0]
        assert leaf_gradient(g, F, y) == pytest.approx(num_grad, rel=1e-6, abs=1e-8)
        assert leaf_hessian(g, F, y) == pytest.approx(num_hess, rel=1e-6, abs=1e-8)
        gamma = newton_leaf_value(F, y)
        assert leaf_objective(gamma, F, y) <= leaf_objective(0.0, F, y) + 1e-12


def test_knn_matches_exhaustive_oracle(rng):
    X = rng.integers(0, 4, size=(40, 3)).astype(float)  # many exact distance ties
    y = rng.integers(0, 2, 40)
    model = KNearestNeighbors(0, k=7).fit(X, y)
    Q = rng.integers(0, 4, size=(50, 3)).astype(float)
    got = model.neighbors(Q)
    for q, row in zip(Q, got):
        assert row.tolist() == knn_neighbors(X.tolist(), q.tolist(), 7)
    assert_allclose(model.predict_proba(Q)[:, 0], y[got].mean(axis=1))


def test_knn_k_larger_than_training_set():
    model = KNearestNeighbors(0, k=10).fit(np.array([[0.0], [1.0]]), np.array([1, 1]))
    assert model.predict_proba(np.array([[0.2]])).tolist() == [[1.0, 0.0]]


def test_adaboost_errors_recomputed(rng):
    X, y = toy_data(rng, n=60, d=3)
    model = AdaBoost(0, n_rounds=25).fit(X, y)
    ypm = np.where(y == 1, 1.0, -1.0)
    w = np.full(len(y), 1 / len(y))
    for t in range(len(model.alphas_)):
        f, thr, pol = model.stump_feature_[t], model.stump_threshold_[t], model.stump_polarity_[t]
        eps = weighted_stump_error(X[:, f], ypm, w, thr, pol)
        assert eps == pytest.approx(model.errors_[t], abs=1e-12)
        assert eps < 0.5
        assert model.alphas_[t] == pytest.approx(0.5 * math.log((1 - eps) / eps))
        h = np.where(X[:, f] > thr, pol, -pol)
        w = w * np.exp(-model.alphas_[t] * ypm * h)
        w /= w.sum()


def test_adaboost_training_error_bound(rng):
    X, y = toy_data(rng, n=80, d=3)
    model = AdaBoost(0, n_rounds=30).fit(X, y)
    train_err = np.mean((model.decision_function(X) > 0).astype(int) != y)
    bound = np.prod([2 * math.sqrt(e * (1 - e)) for e in model.errors_])
    assert train_err <= bound + 1e-12


def test_adaboost_perfect_stump_stops():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    model = AdaBoost(0, n_rounds=50).fit(X, y)
    assert len(model.alphas_) == 1
    assert model.errors_[0] == 0.0
    assert model.alphas_[0] == pytest.approx(0.5 * math.log((1 - ADABOOST_EPS_FLOOR) / ADABOOST_EPS_FLOOR))
    assert model.stump_threshold_[0] == 1.5 and model.stump_polarity_[0] == 1.0


@pytest.mark.parametrize("family,param,small,big", [
    ("random_forest", "n_trees", 7, 20),
    ("gradient_boost", "n_rounds", 7, 20),
    ("adaboost", "n_rounds", 7, 20),
])
def test_staged_truncation_equals_separate_fit(family, param, small, big, rng):
    X, y = toy_data(rng)
    full = models.fit(ClassifierSpec(family, {param: big}, 5), X, y)
    alone = models.fit(ClassifierSpec(family, {param: small}, 5), X, y)
    Q = rng.normal(size=(25, 4))
    assert_array_equal(full.truncated(small).predict_proba(Q), alone.predict_proba(Q))


def test_truncation_unsupported_for_unstaged():
    with pytest.raises(TypeError):
        LogisticRegression().truncated(3)


def test_tree_split_rule_and_ties():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    tree = build_tree(Presorted(X), y, np.ones(4), criterion="gini", max_depth=3)
    # both features split equally well: the lower index wins, threshold at the midpoint
    assert tree.feature[0] == 0 and tree.threshold[0] == 2.5
    assert tree.predict(np.array([[2.5, 0.0], [2.6, 0.0]])).tolist() == [0.0, 1.0]


def test_tree_min_samples_leaf_and_depth(rng):
    X, y = toy_data(rng, n=50)
    tree = build_tree(Presorted(X), y.astype(float), np.ones(50), criterion="gini", max_depth=2, min_samples_leaf=10)
    leaves = tree.apply(X)
    counts = np.bincount(leaves)
    assert counts[counts > 0].min() >= 10
    assert tree.depth <= 2


def test_forest_vote_proportion(rng):
    X, y = toy_data(rng)
    forest = models.fit(ClassifierSpec("random_forest", {"n_trees": 9}, 1), X, y)
    votes = forest.tree_votes(X[:5])
    assert_allclose(forest.predict_proba(X[:5])[:, 0], votes.mean(axis=0))
