"""Category-level importance weights and per-country feature histograms."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import COUNTRY_FLAG_PREFIX, Category, Country, DayType, Trait, derive_seed
from ..errors import InvalidParam, TooSmall, UnknownFeature
from ..features.names import category_of, day_type_of_name
from ..matrix import CohortMatrix
from .protocols import ModelSettings, train_predict

MIN_POPULATION = 10
AGGREGATIONS = ("sum", "mean")


@dataclass(frozen=True)
class ImportanceRow:
    population: str
    trait: Trait
    weights: dict  # Category -> share of total importance, summing to 1
    dominant_daytype: dict  # Category -> DayType | None
    feature_importance: dict  # feature name -> accumulated importance


def _loo_chunk(job):
    matrix, trait, settings, seed, rows = job
    X = matrix.values
    y = matrix.labels[trait]
    names = list(matrix.feature_names)
    per_row = np.zeros((len(rows), len(names)))
    index = {n: j for j, n in enumerate(names)}
    everyone = np.arange(matrix.n_participants)
    for k, i in enumerate(rows):
        train = everyone[everyone != i]
        _, model = train_predict(X[train], y[train], X[[i]], names, settings,
                                 derive_seed(seed, "importance", trait.value, int(i)))
        if model is None:
            continue
        for name, w in zip(model.feature_names, model.importances):
            per_row[k, index[name]] = w
    return per_row


def importance_by_category(matrix: CohortMatrix, trait, settings: ModelSettings | None = None,
                           seed: int = 0, population: str = "all", aggregate: str = "sum",
                           workers: int = 1) -> ImportanceRow:
    """Leave-one-out importances, accumulated per feature and grouped by data category.

    Every fit contributes the importances of its final (post-RFE) model. With
    ``aggregate="sum"`` a category's weight is the total over its features;
    ``"mean"`` divides by the number of its features so categories of
    different sizes compete evenly. Country flag columns are left out. Each
    category is tagged with the day type whose features carry more weight.
    """
    trait = Trait(trait)
    if aggregate not in AGGREGATIONS:
        raise InvalidParam(f"aggregate must be one of {AGGREGATIONS}")
    if matrix.n_participants < MIN_POPULATION:
        raise TooSmall(f"importance needs >= {MIN_POPULATION} participants, "
                       f"got {matrix.n_participants}")
    if trait not in matrix.labels:
        raise InvalidParam(f"matrix has no labels for {trait.value}")
    settings = settings or ModelSettings()
    rows = np.arange(matrix.n_participants)
    chunks = np.array_split(rows, max(1, min(workers, rows.size)))
    jobs = [(matrix, trait, settings, seed, c) for c in chunks]
    if workers <= 1:
        totals = [_loo_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            totals = list(pool.map(_loo_chunk, jobs))
    # Rows are summed in cohort order so the total does not depend on chunking.
    total = np.vstack(totals).sum(axis=0)
    feature_importance = dict(zip(matrix.feature_names, total.tolist()))

    raw = {}
    dominant = {}
    for c in Category:
        names = [n for n in matrix.feature_names
                 if not n.startswith(COUNTRY_FLAG_PREFIX) and category_of(n) == c.value]
        if not names:
            continue
        vals = np.array([feature_importance[n] for n in names])
        raw[c] = float(vals.sum() if aggregate == "sum" else vals.mean())
        wd = sum(feature_importance[n] for n in names if day_type_of_name(n) == DayType.WEEKDAY.value)
        we = sum(feature_importance[n] for n in names if day_type_of_name(n) == DayType.WEEKEND.value)
        dominant[c] = None if wd == we == 0 else (DayType.WEEKDAY if wd >= we else DayType.WEEKEND)
    grand = sum(raw.values())
    if grand > 0:
        weights = {c: v / grand for c, v in raw.items()}
    else:
        weights = {c: 1.0 / len(raw) for c in raw}
    return ImportanceRow(population, trait, weights, dominant, feature_importance)


# Distributions -----------------------------------------------------------------

@dataclass(frozen=True)
class HistogramRow:
    country: str
    feature: str
    bin_left: float
    bin_right: float
    mass: float


def shared_edges(values, bins: int) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi <= lo:
        lo, hi = lo - 0.5, lo + 0.5
    return np.linspace(lo, hi, bins + 1)


def feature_distributions(matrix: CohortMatrix, feature_names, bins: int = 20
                          ) -> list[HistogramRow]:
    """Per-country histograms over bin edges shared by all countries, each summing to 1.

    Missing cells are ignored; a country without observed values emits no rows.
    """
    if bins < 1:
        raise InvalidParam("bins must be >= 1")
    if matrix.participants is None:
        raise InvalidParam("distributions need participant records")
    index = {n: j for j, n in enumerate(matrix.feature_names)}
    countries = np.array([p.country.value for p in matrix.participants])
    rows = []
    for name in feature_names:
        if name not in index:
            raise UnknownFeature(name)
        col = matrix.values[:, index[name]]
        observed = ~np.isnan(col)
        if not observed.any():
            continue
        edges = shared_edges(col[observed], bins)
        for c in Country:
            x = col[observed & (countries == c.value)]
            if x.size == 0:
                continue
            counts, _ = np.histogram(x, edges)
            mass = counts / x.size
            rows.extend(HistogramRow(c.value, name, float(edges[k]), float(edges[k + 1]),
                                     float(mass[k])) for k in range(bins))
    return rows
