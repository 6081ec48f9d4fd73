"""Cross-validation protocols: leave-one-country-out, leave-one-subset-out and
demographically balanced variants."""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import AgeRange, Country, Gender, Trait, derive_seed, rng_for
from ..errors import EmptyPopulation, EmptyStratum, InvalidParam
from ..forest import ForestParams, fit, rfe
from ..matrix import CohortMatrix
from .metrics import accuracy, cohen_kappa

log = logging.getLogger(__name__)

METHOD1 = "method1"
METHOD2 = "method2"
METHODS = (METHOD1, METHOD2)
METHOD1_REPEATS = 10
METHOD2_REPEATS = 15


@dataclass(frozen=True)
class ModelSettings:
    """Classifier used inside every fold: a forest, optionally wrapped in RFE."""

    forest: ForestParams = field(default_factory=ForestParams)
    use_rfe: bool = True
    target_k: int = 50
    drop_frac: float = 0.10


def train_predict(X_train, y_train, X_test, names, settings: ModelSettings, seed: int):
    """Predictions for ``X_test`` and the fitted model.

    A training set holding one class yields that class for every test row and
    no model, so tiny sub-populations do not abort a whole evaluation.
    """
    classes = np.unique(y_train)
    if classes.size == 1:
        log.warning("single-class training fold; predicting class %d", int(classes[0]))
        return np.full(len(X_test), classes[0], dtype=np.int8), None
    params = replace(settings.forest, rng_seed=seed)
    if settings.use_rfe and len(names) > settings.target_k:
        model = rfe(X_train, y_train, params, names, settings.target_k, settings.drop_frac).model
    else:
        model = fit(X_train, y_train, params, names)
    return model.predict(X_test, names), model


@dataclass(frozen=True)
class InstancePrediction:
    participant_id: str
    repeat: int
    fold: str
    truth: int
    pred: int


@dataclass(frozen=True)
class EvalRun:
    method: str
    trait: Trait
    records: tuple[InstancePrediction, ...]
    population: str = "all"

    @property
    def truth(self) -> np.ndarray:
        return np.array([r.truth for r in self.records], dtype=np.int8)

    @property
    def pred(self) -> np.ndarray:
        return np.array([r.pred for r in self.records], dtype=np.int8)

    @property
    def accuracy(self) -> float:
        """Instance-weighted over every (participant, repeat) prediction."""
        return accuracy(self.truth, self.pred)

    @property
    def kappa(self) -> float:
        return cohen_kappa(self.truth, self.pred)

    def correct_by_key(self) -> dict[tuple[str, int], bool]:
        return {(r.participant_id, r.repeat): r.truth == r.pred for r in self.records}


@dataclass(frozen=True)
class Fold:
    repeat: int
    name: str
    train: np.ndarray  # row indices into the cohort matrix
    test: np.ndarray


def _countries(matrix: CohortMatrix) -> list[Country]:
    if matrix.participants is None:
        raise InvalidParam("protocols need participant records on the matrix")
    return [p.country for p in matrix.participants]


def subsample_largest(matrix: CohortMatrix, seed: int, repeat: int,
                      country: Country | None = None, n: int | None = None) -> np.ndarray:
    """Rows kept in one repeat: the largest country is reduced to the smallest's size.

    ``country`` and ``n`` override which country is reduced and to what size.
    The draw depends only on (seed, repeat), so every method and trait sees the
    same subsample in a given repeat.
    """
    countries = np.array([c.value for c in _countries(matrix)])
    sizes = Counter(countries.tolist())
    if len(sizes) < 2:
        raise InvalidParam("cross-country protocols need at least two countries")
    ordered = [c.value for c in Country if c.value in sizes]
    target = Country(country).value if country is not None else max(ordered, key=lambda c: sizes[c])
    size = n if n is not None else min(sizes.values())
    pool = np.flatnonzero(countries == target)
    if size > pool.size:
        raise InvalidParam(f"cannot draw {size} of {pool.size} participants from {target}")
    chosen = rng_for(seed, "subsample", repeat).choice(pool, size=size, replace=False)
    keep = np.concatenate([np.flatnonzero(countries != target), chosen])
    return np.sort(keep)


def method1_folds(matrix: CohortMatrix, repeats: int = METHOD1_REPEATS, seed: int = 0,
                  subsample_country=None, subsample_n=None) -> list[Fold]:
    """Per repeat, one fold per country: train on the others, test on it."""
    countries = np.array([c.value for c in _countries(matrix)])
    folds = []
    for r in range(repeats):
        keep = subsample_largest(matrix, seed, r, subsample_country, subsample_n)
        for c in Country:
            test = keep[countries[keep] == c.value]
            if test.size == 0:
                continue
            folds.append(Fold(r, c.value, keep[countries[keep] != c.value], test))
    return folds


def method2_folds(matrix: CohortMatrix, repeats: int = METHOD2_REPEATS, seed: int = 0,
                  subsample_country=None, subsample_n=None) -> list[Fold]:
    """Per repeat, random subsets sized like the per-country test sets of method 1."""
    countries = np.array([c.value for c in _countries(matrix)])
    folds = []
    for r in range(repeats):
        keep = subsample_largest(matrix, seed, r, subsample_country, subsample_n)
        sizes = [int(np.sum(countries[keep] == c.value)) for c in Country]
        sizes = [s for s in sizes if s > 0]
        perm = rng_for(seed, "partition", r).permutation(keep)
        start = 0
        for k, s in enumerate(sizes):
            test = np.sort(perm[start:start + s])
            start += s
            train = np.setdiff1d(keep, test)
            folds.append(Fold(r, f"subset{k + 1}", train, test))
    return folds


def _run_folds(job):
    matrix, folds, traits, settings, seed, method = job
    X = matrix.values
    names = list(matrix.feature_names)
    out = {t: [] for t in traits}
    for fold in folds:
        for t in traits:
            y = matrix.labels[t]
            fold_seed = derive_seed(seed, method, t.value, fold.repeat, fold.name)
            pred, _ = train_predict(X[fold.train], y[fold.train], X[fold.test], names,
                                    settings, fold_seed)
            out[t].extend(InstancePrediction(matrix.participant_ids[i], fold.repeat, fold.name,
                                             int(y[i]), int(p))
                          for i, p in zip(fold.test, pred))
    return out


def run_folds(matrix: CohortMatrix, folds: list[Fold], traits, settings: ModelSettings,
              seed: int, method: str, population: str = "all",
              workers: int = 1) -> dict[Trait, EvalRun]:
    """Train and test every fold for every trait; each repeat is one parallel unit."""
    traits = [Trait(t) for t in traits]
    missing = [t.value for t in traits if t not in matrix.labels]
    if missing:
        raise InvalidParam(f"matrix has no labels for {missing}")
    if np.isnan(matrix.values).any():
        raise InvalidParam("evaluation needs a fully imputed matrix")
    by_repeat: dict[int, list[Fold]] = {}
    for f in folds:
        by_repeat.setdefault(f.repeat, []).append(f)
    jobs = [(matrix, fs, traits, settings, seed, method) for _, fs in sorted(by_repeat.items())]
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_folds(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_folds, jobs))
    return {t: EvalRun(method, t, tuple(r for part in parts for r in part[t]), population)
            for t in traits}


def method1_loco(matrix: CohortMatrix, traits=tuple(Trait), settings: ModelSettings | None = None,
                 repeats: int = METHOD1_REPEATS, seed: int = 0, population: str = "all",
                 workers: int = 1, subsample_country=None, subsample_n=None
                 ) -> dict[Trait, EvalRun]:
    """Leave-one-country-out without country flags."""
    folds = method1_folds(matrix, repeats, seed, subsample_country, subsample_n)
    return run_folds(matrix, folds, traits, settings or ModelSettings(), seed, METHOD1,
                     population, workers)


def method2_loso(matrix: CohortMatrix, traits=tuple(Trait), settings: ModelSettings | None = None,
                 repeats: int = METHOD2_REPEATS, seed: int = 0, population: str = "all",
                 workers: int = 1, subsample_country=None, subsample_n=None
                 ) -> dict[Trait, EvalRun]:
    """Leave-one-subset-out with one binary flag column per country."""
    folds = method2_folds(matrix, repeats, seed, subsample_country, subsample_n)
    return run_folds(matrix.with_country_flags(), folds, traits, settings or ModelSettings(),
                     seed, METHOD2, population, workers)


def run_method(method: str, matrix: CohortMatrix, **kwargs) -> dict[Trait, EvalRun]:
    if method == METHOD1:
        return method1_loco(matrix, **kwargs)
    if method == METHOD2:
        return method2_loso(matrix, **kwargs)
    raise InvalidParam(f"unknown method {method!r}; expected one of {METHODS}")


# Populations -------------------------------------------------------------------

POPULATIONS = {
    "all": lambda p: True,
    "female": lambda p: p.gender is Gender.FEMALE,
    "male": lambda p: p.gender is Gender.MALE,
    "student": lambda p: p.is_student,
    "non_student": lambda p: not p.is_student,
    **{c.value: (lambda p, c=c: p.country is c) for c in Country},
}


def population_filter(matrix: CohortMatrix, predicate, name: str = "custom") -> CohortMatrix:
    """Rows whose participant satisfies ``predicate`` (a callable or a population name)."""
    if isinstance(predicate, str):
        if predicate not in POPULATIONS:
            raise InvalidParam(f"unknown population {predicate!r}")
        name, predicate = predicate, POPULATIONS[predicate]
    if matrix.participants is None:
        raise InvalidParam("population filters need participant records")
    rows = [i for i, p in enumerate(matrix.participants) if predicate(p)]
    if not rows:
        raise EmptyPopulation(f"population {name!r} is empty")
    return matrix.take(rows)


# Demographic balancing ---------------------------------------------------------

BALANCE_AXES = {
    "gender": (lambda p: p.gender, tuple(Gender)),
    "age": (lambda p: p.age_range, tuple(AgeRange)),
}


def balanced_filter(matrix: CohortMatrix, axis: str, repeats: int = 10,
                    seed: int = 0) -> list[np.ndarray]:
    """Row sets for each repeat with the largest stratum cut to the smallest's size.

    Only the largest stratum is subsampled; the others are kept whole.
    """
    if axis not in BALANCE_AXES:
        raise InvalidParam(f"unknown balance axis {axis!r}; expected gender or age")
    if matrix.participants is None:
        raise InvalidParam("balancing needs participant records")
    key, strata = BALANCE_AXES[axis]
    values = [key(p) for p in matrix.participants]
    members = {s: np.array([i for i, v in enumerate(values) if v is s], dtype=int) for s in strata}
    empty = [s.value for s, m in members.items() if m.size == 0]
    if empty:
        raise EmptyStratum(f"{axis} stratum {empty} has no participants")
    largest = max(strata, key=lambda s: members[s].size)
    smallest = min(m.size for m in members.values())
    others = np.concatenate([m for s, m in members.items() if s is not largest])
    out = []
    for r in range(repeats):
        chosen = rng_for(seed, "balance", axis, r).choice(members[largest], size=smallest,
                                                            replace=False)
        out.append(np.sort(np.concatenate([others, chosen])))
    return out


def evaluate_balanced(matrix: CohortMatrix, axis: str, traits=tuple(Trait),
                      settings: ModelSettings | None = None, repeats: int = 10, seed: int = 0,
                      methods=METHODS, workers: int = 1) -> dict[str, dict[Trait, EvalRun]]:
    """Run each method once per balanced sub-cohort and pool the predictions.

    Records carry the balance repeat as their repeat index.
    """
    population = f"{axis}_balanced"
    pooled = {m: {Trait(t): [] for t in traits} for m in methods}
    for r, rows in enumerate(balanced_filter(matrix, axis, repeats, seed)):
        sub = matrix.take(rows)
        sub_seed = derive_seed(seed, "balanced", axis, r)
        for m in methods:
            runs = run_method(m, sub, traits=traits, settings=settings, repeats=1,
                              seed=sub_seed, population=population, workers=workers)
            for t, run in runs.items():
                pooled[m][t].extend(replace(rec, repeat=r) for rec in run.records)
    return {m: {t: EvalRun(m, t, tuple(recs), population) for t, recs in per.items()}
            for m, per in pooled.items()}
