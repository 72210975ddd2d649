import numpy as np
import pytest

from conftest import SMALL_GRIDS, random_examples
from wcforecast import training
from wcforecast.errors import ConfigError, DataError
from wcforecast.seeds import derive_seed, rng_for
from wcforecast.training import (
    PipelineConfig,
    expand_grid,
    grid_search,
    plan_folds,
    predicted_labels,
    split_train_test,
    train_ensemble,
)


def test_derive_seed_is_stable_and_namespaced():
    assert derive_seed(1, "folds") == derive_seed(1, "folds")
    assert derive_seed(1, "folds") != derive_seed(2, "folds")
    assert derive_seed(1, "model", "knn") != derive_seed(1, "model", "logistic")
    assert 0 <= derive_seed(99, "x") < 2**32
    assert rng_for(3, "a").random() == rng_for(3, "a").random()


def test_split_keeps_matches_together(rng):
    ex = random_examples(rng, 50)
    train, test = split_train_test(ex, 0.2, seed=4)
    assert set(train.match_ids).isdisjoint(test.match_ids)
    assert len(set(test.match_ids)) == 10
    assert len(train) + len(test) == len(ex)


def test_chronological_split_takes_latest(rng):
    ex = random_examples(rng, 40)
    train, test = split_train_test(ex, 0.25, mode="chronological")
    assert train.dates.max() <= test.dates.min()
    with pytest.raises(ValueError):
        split_train_test(ex, 0.25, mode="sideways")


def test_split_too_small():
    ex = random_examples(np.random.default_rng(0), 2)
    with pytest.raises(DataError):
        split_train_test(ex, 0.1)


@pytest.mark.parametrize("stratified", [False, True])
def test_fold_integrity(stratified, rng):
    for _ in range(20):
        ex = random_examples(rng)
        k = int(rng.integers(2, 7))
        plan = plan_folds(ex, k, seed=int(rng.integers(1000)), stratified=stratified)
        seen = np.zeros(len(ex), dtype=int)
        sizes = []
        for fit_rows, eval_rows in plan.folds():
            assert set(fit_rows).isdisjoint(eval_rows)
            assert len(fit_rows) + len(eval_rows) == len(ex)
            seen[eval_rows] += 1
            sizes.append(len(set(ex.match_ids[eval_rows])))
            assert set(ex.match_ids[fit_rows]).isdisjoint(ex.match_ids[eval_rows])
        assert np.all(seen == 1)
        assert max(sizes) - min(sizes) <= 1


def test_stratified_folds_balance_labels(rng):
    ex = random_examples(rng, 57)
    plan = plan_folds(ex, 5, seed=1, stratified=True)
    unswapped = ~ex.swapped
    for _, eval_rows in plan.folds():
        pos = int(ex.y[eval_rows][unswapped[eval_rows]].sum())
        counts = np.bincount(plan.assignments[unswapped & (ex.y == 1)], minlength=5)
        assert counts.max() - counts.min() <= 1
        assert pos in (counts.min(), counts.max())


def test_plan_folds_validation(rng):
    ex = random_examples(rng, 3)
    with pytest.raises(DataError):
        plan_folds(ex, 5)
    with pytest.raises(ValueError):
        plan_folds(ex, 1)


def test_expand_grid_order():
    cells = expand_grid({"a": [1, 2], "b": ["x", "y"]}, (None, 0.9))
    assert cells[:4] == [
        {"pca": None, "a": 1, "b": "x"},
        {"pca": None, "a": 1, "b": "y"},
        {"pca": None, "a": 2, "b": "x"},
        {"pca": None, "a": 2, "b": "y"},
    ]
    assert [c["pca"] for c in cells[4:]] == [0.9] * 4


def test_pipeline_allows_one_pca_target():
    with pytest.raises(ConfigError):
        PipelineConfig(pca_options=(0.9, 0.95))
    with pytest.raises(ConfigError):
        PipelineConfig(pca_options=())
    assert PipelineConfig().pca_target == 0.95


def test_predicted_labels_half_goes_to_b():
    assert predicted_labels(np.array([[0.5, 0.5], [0.6, 0.4]])).tolist() == [0, 1]


def test_grid_search_ties_go_to_first_cell(rng):
    ex = random_examples(rng, 40)
    folds = plan_folds(ex, 4, seed=0)
    # identical cells score identically, so the first must win
    res = grid_search("knn", [{"k": 3}, {"k": 3, "pca": None}], ex, folds)
    assert res.best_params == {"k": 3, "pca": None}
    assert res.cells[0].mean_accuracy == res.cells[1].mean_accuracy
    assert len(res.fold_accuracies) == 4


def test_grid_search_does_not_mutate_input(rng):
    ex = random_examples(rng, 30)
    grid = [{"k": 3}]
    grid_search("knn", grid, ex, plan_folds(ex, 3))
    assert grid == [{"k": 3}]


def test_staged_grid_matches_separate_searches(rng):
    ex = random_examples(rng, 40)
    folds = plan_folds(ex, 3, seed=2)
    joint = grid_search("adaboost", {"n_rounds": [3, 9]}, ex, folds, PipelineConfig((None,)), seed=5)
    for i, n in enumerate([3, 9]):
        alone = grid_search("adaboost", {"n_rounds": [n]}, ex, folds, PipelineConfig((None,)), seed=5)
        assert joint.cells[i].fold_accuracies == alone.cells[0].fold_accuracies
        assert joint.cells[i].fold_log_losses == alone.cells[0].fold_log_losses


def test_grid_search_fits_only_on_fold_rows(monkeypatch, rng):
    ex = random_examples(rng, 30)
    folds = plan_folds(ex, 3, seed=0)
    fit_sizes = []
    real = training.fit_model

    def spy(spec, X, y):
        fit_sizes.append(len(X))
        return real(spec, X, y)

    monkeypatch.setattr(training, "fit_model", spy)
    grid_search("logistic", {"l2": [0.1, 1.0]}, ex, folds, PipelineConfig((None,)))
    expected = [len(f) for f, _ in folds.folds() for _ in range(2)]
    assert fit_sizes == expected


def test_grid_search_rejects_unknown_family_and_empty_grid(rng):
    ex = random_examples(rng, 20)
    with pytest.raises(ValueError):
        grid_search("svm", {"c": [1]}, ex, plan_folds(ex, 2))
    with pytest.raises(ValueError):
        grid_search("knn", [], ex, plan_folds(ex, 2))


def test_train_ensemble_members_and_determinism(small_world):
    _, attrs, profiles, examples = small_world
    a, searches = train_ensemble(examples, SMALL_GRIDS, seed=3, profiles=profiles, attributes=attrs)
    b, _ = train_ensemble(examples, SMALL_GRIDS, seed=3, profiles=profiles, attributes=attrs)
    assert [m.family for m in a.members] == list(training.FAMILIES)
    assert set(searches) == set(training.FAMILIES)
    X = examples.X[:10]
    for fam in training.FAMILIES:
        np.testing.assert_array_equal(a.family_proba(X)[fam], b.family_proba(X)[fam])
    a.check()


def test_train_ensemble_requires_all_families(small_world):
    _, _, _, examples = small_world
    with pytest.raises(ConfigError):
        train_ensemble(examples, {"knn": {"k": [3]}})
