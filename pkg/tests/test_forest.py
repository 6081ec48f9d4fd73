import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobipersona.core import HIGH, LOW
from mobipersona.errors import InvalidParam, SchemaMismatch, SingleClass
from mobipersona.forest import ForestParams, dump_model, fit, rfe


def _separable(n=40, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, n)
    X = np.column_stack([x, rng.normal(size=n)])
    return X, (x > 5).astype(np.int8)


def _planted(n=80, d=3, seed=0):
    """Column 0 carries the label through a noisy threshold; the rest is noise."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] + 0.3 * rng.normal(size=n) > 0).astype(np.int8)
    return X, y


def test_constant_labels_rejected():
    with pytest.raises(SingleClass):
        fit(np.zeros((5, 2)), np.zeros(5, dtype=np.int8))


def test_param_validation():
    with pytest.raises(InvalidParam):
        ForestParams(n_trees=0)
    with pytest.raises(InvalidParam):
        ForestParams(features_per_split=5).mtry(3)
    assert ForestParams().mtry(282) == 16


def test_separable_training_accuracy():
    X, y = _separable()
    model = fit(X, y, ForestParams(n_trees=15, rng_seed=3))
    assert np.array_equal(model.predict(X), y)


def test_planted_feature_has_max_importance_in_most_runs():
    wins = 0
    for seed in range(20):
        X, y = _planted(seed=seed)
        model = fit(X, y, ForestParams(n_trees=30, rng_seed=seed))
        wins += int(np.argmax(model.importances) == 0)
    assert wins >= 11


def test_importances_nonnegative_and_normalized():
    X, y = _planted(d=6)
    imp = fit(X, y, ForestParams(n_trees=10)).importances
    assert (imp >= 0).all() and imp.sum() == pytest.approx(1.0, abs=1e-12)


def test_thresholds_lie_strictly_between_observed_values():
    X, y = _planted(d=4, seed=5)
    model = fit(X, y, ForestParams(n_trees=5, rng_seed=1))
    for t in range(model.n_trees):
        for k in range(int(model.n_nodes[t])):
            f = int(model.feature[t, k])
            if f < 0:
                continue
            thr = model.threshold[t, k]
            col = X[:, f]
            assert (col < thr).any() and (col > thr).any()
            assert not np.isin(thr, col)


def test_single_tree_matches_its_leaf():
    X, y = _planted(seed=2)
    model = fit(X, y, ForestParams(n_trees=1, rng_seed=4))
    assert np.array_equal(model.predict(X), model.tree_votes(X)[0])


def _with_leaf_values(model, per_tree):
    value = model.value.copy()
    for t, v in enumerate(per_tree):
        value[t, :] = v
    return dataclasses.replace(model, value=value)


def test_tied_vote_goes_low():
    X, y = _planted(seed=3)
    model = _with_leaf_values(fit(X, y, ForestParams(n_trees=2)), [1.0, 0.0])
    labels, frac = model.predict_with_fractions(X)
    assert (labels == LOW).all() and np.allclose(frac, 0.5)


def test_half_leaf_votes_low():
    X, y = _planted(seed=3)
    model = _with_leaf_values(fit(X, y, ForestParams(n_trees=1)), [0.5])
    assert (model.predict(X) == LOW).all()
    model = _with_leaf_values(model, [0.51])
    assert (model.predict(X) == HIGH).all()


def test_deterministic_for_fixed_seed():
    X, y = _planted(d=5, seed=7)
    a = dump_model(fit(X, y, ForestParams(n_trees=8, rng_seed=9)))
    b = dump_model(fit(X, y, ForestParams(n_trees=8, rng_seed=9)))
    c = dump_model(fit(X, y, ForestParams(n_trees=8, rng_seed=10)))
    assert a == b and a != c


def test_trees_depend_only_on_their_own_index():
    X, y = _planted(d=5, seed=7)
    small = fit(X, y, ForestParams(n_trees=3, rng_seed=2))
    large = fit(X, y, ForestParams(n_trees=6, rng_seed=2))
    width = small.feature.shape[1]
    assert np.array_equal(small.feature, large.feature[:3, :width])


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.permutations(range(4)))
def test_prediction_invariant_under_column_permutation(seed, perm):
    X, y = _planted(n=50, d=4, seed=seed)
    names = [f"c{j}" for j in range(4)]
    model = fit(X, y, ForestParams(n_trees=5, rng_seed=seed), names)
    shuffled = model.predict(X[:, perm], [names[j] for j in perm])
    assert np.array_equal(shuffled, model.predict(X))


def test_schema_mismatch():
    X, y = _planted(d=3)
    model = fit(X, y, ForestParams(n_trees=2), ["a", "b", "c"])
    with pytest.raises(SchemaMismatch):
        model.predict(X[:, :2])
    with pytest.raises(SchemaMismatch):
        model.predict(X, ["a", "b", "z"])


def test_duplicated_rows_keep_training_accuracy():
    X, y = _separable(seed=4)
    once = fit(X, y, ForestParams(n_trees=10, rng_seed=1))
    X2, y2 = np.vstack([X, X]), np.concatenate([y, y])
    twice = fit(X2, y2, ForestParams(n_trees=10, rng_seed=1))
    assert np.mean(once.predict(X2) == y2) == np.mean(twice.predict(X2) == y2) == 1.0


def test_rfe_one_round_when_one_over_target():
    X, y = _planted(d=6)
    result = rfe(X, y, ForestParams(n_trees=5), target_k=5)
    assert result.rounds == 1 and len(result.selected) == 5


def test_rfe_schedule_lands_on_target():
    X, y = _planted(n=60, d=120)
    result = rfe(X, y, ForestParams(n_trees=5), target_k=50, drop_frac=0.10)
    # 120 -> 108 -> 97 -> 87 -> 78 -> 70 -> 63 -> 56 -> 50
    assert result.rounds == 8
    assert len(result.selected) == 50 and result.model.feature_names == result.selected


def test_rfe_rejects_zero_drop():
    X, y = _planted(d=6)
    with pytest.raises(InvalidParam):
        rfe(X, y, target_k=3, drop_frac=0.0)


def test_planted_feature_survives_rfe():
    survived = 0
    for seed in range(20):
        X, y = _planted(n=80, d=30, seed=seed)
        names = [f"f{j}" for j in range(30)]
        result = rfe(X, y, ForestParams(n_trees=20, rng_seed=seed), names, target_k=5)
        survived += "f0" in result.selected
    assert survived >= 18
