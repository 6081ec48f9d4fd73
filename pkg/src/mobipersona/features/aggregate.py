"""Study-period aggregation of daily records into a feature vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DayType
from .names import DAY_TYPES, daily_keys, feature_names, routine_names


@dataclass(frozen=True)
class DailyRecord:
    participant_id: str
    day_index: int
    day_type: DayType
    values: dict  # daily key -> float | None


@dataclass(frozen=True)
class FeatureVector:
    participant_id: str
    values: dict  # feature name -> float | None, canonical order

    @property
    def missing_fraction(self) -> float:
        return sum(v is None for v in self.values.values()) / len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self.values.values()], dtype=float)


def aggregate(records, routine=None, participant_id: str | None = None) -> FeatureVector:
    """Mean and sample std (n-1) of each daily feature, split by day type.

    Means use the days on which a feature is present; the std is absent with
    fewer than two such days. ``routine`` maps DayType to the routine index
    (or ``None``).
    """
    records = list(records)
    if participant_id is None:
        participant_id = records[0].participant_id if records else ""
    routine = routine or {}
    per_type = {t: [r for r in records if r.day_type is t] for t in DAY_TYPES}
    computed = {}
    for key in daily_keys():
        for t in DAY_TYPES:
            xs = [r.values.get(key) for r in per_type[t]]
            xs = [x for x in xs if x is not None]
            computed[f"{key}.mean.{t.value}"] = float(np.mean(xs)) if xs else None
            computed[f"{key}.std.{t.value}"] = float(np.std(xs, ddof=1)) if len(xs) >= 2 else None
    for t, name in zip(DAY_TYPES, routine_names()):
        value = routine.get(t)
        computed[name] = None if value is None else float(value)
    return FeatureVector(participant_id, {name: computed[name] for name in feature_names()})
