from dataclasses import replace

import numpy as np
import pytest

from mobipersona.core import Category, Country, Trait
from mobipersona.errors import TooSmall, UnknownFeature
from mobipersona.eval.importance import feature_distributions, importance_by_category
from mobipersona.eval.protocols import ModelSettings, population_filter
from mobipersona.forest import ForestParams

from helpers import cohort_matrix

SIGNAL = "noise.median_db.entire_day.mean.weekday"
SETTINGS = ModelSettings(ForestParams(n_trees=10), use_rfe=True, target_k=4)


@pytest.fixture(scope="module")
def matrix():
    return cohort_matrix(planted={SIGNAL: Trait.EXTRAVERSION}, strength=4.0)


@pytest.fixture(scope="module")
def uk(matrix):
    return population_filter(matrix, "UK")


def test_weights_sum_to_one_and_planted_category_wins(uk):
    row = importance_by_category(uk, Trait.EXTRAVERSION, SETTINGS, seed=0, population="UK")
    assert sum(row.weights.values()) == pytest.approx(1.0, abs=1e-9)
    assert max(row.weights, key=row.weights.get) is Category.NOISE
    assert all(w >= 0 for w in row.weights.values())


def test_mean_aggregation_also_sums_to_one(uk):
    row = importance_by_category(uk, Trait.OPENNESS, SETTINGS, aggregate="mean")
    assert sum(row.weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_flags_never_counted(uk):
    flagged = uk.with_country_flags()
    row = importance_by_category(flagged, Trait.EXTRAVERSION, SETTINGS)
    assert set(row.weights) <= set(Category)
    assert sum(row.weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_importance_independent_of_workers(uk):
    a = importance_by_category(uk, Trait.EXTRAVERSION, SETTINGS, seed=2, workers=1)
    b = importance_by_category(uk, Trait.EXTRAVERSION, SETTINGS, seed=2, workers=2)
    assert a.feature_importance == b.feature_importance


def test_too_small(matrix):
    with pytest.raises(TooSmall):
        importance_by_category(matrix.take(range(9)), Trait.EXTRAVERSION, SETTINGS)


def test_histograms_normalized_per_country(matrix):
    rows = feature_distributions(matrix, [SIGNAL], bins=7)
    for c in Country:
        mass = [r.mass for r in rows if r.country == c.value]
        assert len(mass) == 7 and sum(mass) == pytest.approx(1.0, abs=1e-9)
    lefts = {(r.bin_left, r.bin_right) for r in rows}
    assert len(lefts) == 7


def test_single_participant_histogram(matrix):
    rows = feature_distributions(matrix.take([0]), [SIGNAL], bins=5)
    assert sorted(r.mass for r in rows) == [0, 0, 0, 0, 1.0]


def test_unknown_feature(matrix):
    with pytest.raises(UnknownFeature):
        feature_distributions(matrix, ["nope"])


def test_histogram_means_follow_shifted_groups(matrix):
    eu = {"UK", "ES"}
    shifted = matrix.values.copy()
    j = matrix.feature_names.index(SIGNAL)
    for i, p in enumerate(matrix.participants):
        shifted[i, j] = (0.0 if p.country.value in eu else 10.0) + 0.1 * shifted[i, j]
    rows = feature_distributions(replace(matrix, values=shifted), [SIGNAL], bins=20)
    means = {}
    for c in Country:
        rs = [r for r in rows if r.country == c.value]
        means[c.value] = sum(r.mass * (r.bin_left + r.bin_right) / 2 for r in rs)
    assert max(means[c] for c in eu) < min(v for k, v in means.items() if k not in eu)
    assert np.isfinite(list(means.values())).all()
