"""Canonical feature names.

A daily base key is ``category.base[.period]``; the study-period feature adds
``.stat.daytype`` with stat in {mean, std}. The two routine indices are
period-level values named ``location.routine_index.<daytype>``.
"""

from __future__ import annotations

from ..core import PERIODS, PERIODS_AND_DAY, Category, DayType

STATS = ("mean", "std")
DAY_TYPES = (DayType.WEEKDAY, DayType.WEEKEND)


def _with_periods(base, periods):
    return [f"{base}.{p.value}" for p in periods]


DAILY_BASES: dict[Category, list[str]] = {
    Category.ACCELEROMETER: (
        ["freq_mean", "freq_std", "amplitude_mean", "amplitude_std"]
        + _with_periods("energy_mean", PERIODS)
        + _with_periods("energy_std", PERIODS)
    ),
    Category.BATTERY: ["level_mean", "charges"],
    Category.CALLS: [
        "incoming_count", "outgoing_count", "missed_count", "rejected_count",
        "incoming_duration", "outgoing_duration",
        "incoming_correspondents", "outgoing_correspondents", "missed_correspondents",
    ],
    Category.UNLOCKS: (
        _with_periods("first_unlock", PERIODS_AND_DAY)
        + ["last_unlock", "session_duration", "unlock_interval", "unlock_count"]
    ),
    Category.LIGHT: _with_periods("median_lux", PERIODS_AND_DAY),
    Category.LOCATION: (
        ["entropy", "places_count", "places_dwell", "stop_count", "gyration_radius"]
        + _with_periods("home_time", PERIODS_AND_DAY)
        + ["work_time", "distance", "travel_duration"]
    ),
    Category.NOISE: (
        _with_periods("median_db", PERIODS_AND_DAY)
        + _with_periods("median_scaled", PERIODS_AND_DAY)
        + _with_periods("silence_ratio", PERIODS_AND_DAY)
    ),
    Category.PEDOMETER: _with_periods("steps", PERIODS_AND_DAY),
}

# Count-like bases are 0 (not absent) on an active day when the participant
# has the category stream at all.
COUNT_LIKE: dict[Category, frozenset[str]] = {
    Category.BATTERY: frozenset({"charges"}),
    Category.CALLS: frozenset(DAILY_BASES[Category.CALLS]),
    Category.UNLOCKS: frozenset({"unlock_count"}),
    Category.PEDOMETER: frozenset(DAILY_BASES[Category.PEDOMETER]),
}

ROUTINE_BASE = "routine_index"

# 70 daily bases x 2 stats x 2 day types + 2 routine indices.
N_FEATURES = 282


def daily_keys() -> list[str]:
    return [f"{c.value}.{b}" for c in Category for b in DAILY_BASES[c]]


def routine_names() -> list[str]:
    return [f"{Category.LOCATION.value}.{ROUTINE_BASE}.{t.value}" for t in DAY_TYPES]


def feature_names() -> list[str]:
    """All study-period feature names in canonical order."""
    names = []
    for c in Category:
        for b in DAILY_BASES[c]:
            for stat in STATS:
                for t in DAY_TYPES:
                    names.append(f"{c.value}.{b}.{stat}.{t.value}")
        if c is Category.LOCATION:
            names.extend(routine_names())
    return names


def category_of(name: str) -> str:
    return name.split(".", 1)[0]


def day_type_of_name(name: str) -> str | None:
    last = name.rsplit(".", 1)[-1]
    return last if last in (DayType.WEEKDAY.value, DayType.WEEKEND.value) else None


def category_feature_counts() -> dict[Category, int]:
    counts = {c: 0 for c in Category}
    for n in feature_names():
        counts[Category(category_of(n))] += 1
    return counts
