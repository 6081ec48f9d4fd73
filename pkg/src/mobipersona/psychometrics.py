"""Questionnaire scoring, reliability and descriptive trait statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import Participant, Trait
from .errors import BadResponse, EmptyPopulation, ZeroVariance

N_ITEMS = 50
ITEMS_PER_TRAIT = 10
LIKERT_MIN, LIKERT_MAX = 1, 5
POSITIVE, REVERSED = "positive", "reversed"


@dataclass(frozen=True)
class ScoringKey:
    """``items[i]`` is the (Trait, keying) of questionnaire item ``i + 1``."""

    items: tuple[tuple[Trait, str], ...]

    def __post_init__(self):
        if len(self.items) != N_ITEMS:
            raise ValueError(f"scoring key needs {N_ITEMS} items, got {len(self.items)}")
        for t in Trait:
            n = sum(1 for trait, _ in self.items if trait is t)
            if n != ITEMS_PER_TRAIT:
                raise ValueError(f"{t.value}: {n} items, expected {ITEMS_PER_TRAIT}")
        if any(k not in (POSITIVE, REVERSED) for _, k in self.items):
            raise ValueError("keying must be 'positive' or 'reversed'")

    def item_indices(self, trait: Trait) -> list[int]:
        """Zero-based indices of the items scoring ``trait``."""
        return [i for i, (t, _) in enumerate(self.items) if t is Trait(trait)]

    def reversed_mask(self) -> np.ndarray:
        return np.array([k == REVERSED for _, k in self.items])


def load_key(path=None) -> ScoringKey:
    """Read a key file with columns ``item,trait,keying``; defaults to the bundled IPIP-50 key."""
    if path is None:
        text = resources.files("mobipersona.data").joinpath("ipip50_key.csv").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = list(csv.DictReader(text.splitlines()))
    rows.sort(key=lambda r: int(r["item"]))
    if [int(r["item"]) for r in rows] != list(range(1, N_ITEMS + 1)):
        raise ValueError("scoring key items must be exactly 1..50")
    return ScoringKey(tuple((Trait(r["trait"]), r["keying"]) for r in rows))


_DEFAULT_KEY: ScoringKey | None = None


def default_key() -> ScoringKey:
    global _DEFAULT_KEY
    if _DEFAULT_KEY is None:
        _DEFAULT_KEY = load_key()
    return _DEFAULT_KEY


def _check_responses(responses) -> np.ndarray:
    r = np.asarray(responses)
    if r.shape[-1] != N_ITEMS:
        raise BadResponse(f"expected {N_ITEMS} responses, got {r.shape[-1]}")
    if not np.issubdtype(r.dtype, np.integer):
        if not np.all(np.isfinite(r)) or np.any(r != np.round(r)):
            raise BadResponse("responses must be integers")
        r = r.astype(int)
    if np.any((r < LIKERT_MIN) | (r > LIKERT_MAX)):
        raise BadResponse(f"responses must lie in [{LIKERT_MIN}, {LIKERT_MAX}]")
    return r


def keyed_items(responses, key: ScoringKey | None = None) -> np.ndarray:
    """Item values after reversal (6 - r for reversed items)."""
    key = key or default_key()
    r = _check_responses(responses)
    return np.where(key.reversed_mask(), LIKERT_MAX + LIKERT_MIN - r, r)


def score_traits(responses, key: ScoringKey | None = None) -> dict[Trait, int]:
    """Sum of the ten keyed items per trait, each in [10, 50]."""
    key = key or default_key()
    items = keyed_items(responses, key)
    return {t: int(items[key.item_indices(t)].sum()) for t in Trait}


def score_matrix(responses, key: ScoringKey | None = None) -> np.ndarray:
    """Scores for many response vectors: shape (n, 5) in Trait order."""
    key = key or default_key()
    items = keyed_items(np.atleast_2d(responses), key)
    return np.stack([items[:, key.item_indices(t)].sum(axis=1) for t in Trait], axis=1)


def cronbach_alpha(items) -> float:
    """Internal consistency of an (n participants, k items) matrix."""
    x = np.asarray(items, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError("need at least 2 participants and 2 items")
    k = x.shape[1]
    total_var = x.sum(axis=1).var(ddof=1)
    if total_var == 0:
        raise ZeroVariance("total-score variance is zero")
    return float(k / (k - 1) * (1.0 - x.var(axis=0, ddof=1).sum() / total_var))


def trait_alpha(responses, trait: Trait, key: ScoringKey | None = None) -> float:
    key = key or default_key()
    items = keyed_items(np.atleast_2d(responses), key)
    return cronbach_alpha(items[:, key.item_indices(trait)])


@dataclass(frozen=True)
class TraitStat:
    n: int
    mean: float
    std: float | None  # sample std; absent for a single participant
    median: float
    max: float
    min: float


@dataclass(frozen=True)
class CohortTraitStats:
    population: str
    stats: dict  # Trait -> TraitStat

    def rows(self) -> list[dict]:
        return [{"population": self.population, "trait": t.value, **vars(s)}
                for t, s in self.stats.items()]


def describe(scores) -> TraitStat:
    x = np.asarray(scores, dtype=float)
    if x.size == 0:
        raise EmptyPopulation("no scores to describe")
    return TraitStat(int(x.size), float(x.mean()),
                     float(x.std(ddof=1)) if x.size >= 2 else None,
                     float(np.median(x)), float(x.max()), float(x.min()))


def trait_stats(participants, predicate=None, population: str = "all",
                key: ScoringKey | None = None) -> CohortTraitStats:
    """Descriptive statistics of each trait over the participants passing ``predicate``."""
    chosen: list[Participant] = [p for p in participants if predicate is None or predicate(p)]
    if not chosen:
        raise EmptyPopulation(f"population {population!r} is empty")
    scores = score_matrix([p.responses for p in chosen], key)
    return CohortTraitStats(population, {t: describe(scores[:, j]) for j, t in enumerate(Trait)})
