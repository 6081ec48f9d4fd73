"""Per-participant feature extraction and cohort feature matrices."""

from __future__ import annotations

import csv
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import Category, DayType, Participant, day_type_of, local_day_index
from ..errors import Insufficient, ParseError
from ..ingest import CohortManifest, EventLog, parse_event_log
from ..matrix import CohortMatrix
from .aggregate import DailyRecord, FeatureVector, aggregate
from .daily import (
    MIN_SPECTRAL_SAMPLES,
    accel_daily,
    battery_daily,
    calls_daily,
    light_daily,
    noise_daily,
    pedometer_daily,
    unlocks_daily,
)
from .location import build_places, detect_stay_points, location_daily, routine_index, visited_places
from .names import DAILY_BASES, DAY_TYPES, feature_names


@dataclass(frozen=True)
class FeatureConfig:
    roam_radius_m: float = 200.0
    min_dwell_s: float = 1200.0
    merge_radius_m: float = 200.0
    work_hours: tuple[int, int] = (9, 17)
    silence_threshold_db: float = 40.0
    max_speed_kmh: float = 300.0
    min_burst_samples: int = MIN_SPECTRAL_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "work_hours", tuple(self.work_hours))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["work_hours"] = list(self.work_hours)
        return d


@dataclass(frozen=True)
class ParticipantFeatures:
    vector: FeatureVector
    daily: tuple[DailyRecord, ...]
    categories_present: frozenset[Category] = field(default_factory=frozenset)


def _by_day(events, tz):
    days = defaultdict(list)
    if events:
        idx = local_day_index([e.timestamp_ms for e in events], tz)
        for e, d in zip(events, idx):
            days[int(d)].append(e)
    return days


def extract_participant(participant_id: str, event_log: EventLog, tz_offset_minutes: int = 0,
                        config: FeatureConfig | None = None) -> ParticipantFeatures:
    """Daily records for every active day, then the aggregated feature vector.

    An active day has at least one event of any category. A category the
    participant never recorded leaves all its features absent; otherwise
    count-like features read 0 on active days without events of that category.
    """
    cfg = config or FeatureConfig()
    tz = tz_offset_minutes
    streams = {c: event_log.of(c) for c in Category}
    present = frozenset(c for c, ev in streams.items() if ev)
    per_day = {c: _by_day(ev, tz) for c, ev in streams.items()}
    active_days = sorted({d for days in per_day.values() for d in days})

    noise_minmax = None
    if Category.NOISE in present:
        db = [e.payload.db for e in streams[Category.NOISE]]
        noise_minmax = (min(db), max(db))

    places, stays = [], []
    if Category.LOCATION in present:
        stays = detect_stay_points(streams[Category.LOCATION], cfg.roam_radius_m, cfg.min_dwell_s)
        if stays:
            places = build_places(stays, tz, cfg.merge_radius_m, cfg.work_hours)

    daily_fns = {
        Category.ACCELEROMETER: lambda ev, d: accel_daily(ev, d, tz, cfg.min_burst_samples),
        Category.BATTERY: lambda ev, d: battery_daily(ev, d, tz),
        Category.CALLS: lambda ev, d: calls_daily(ev, d, tz),
        Category.UNLOCKS: lambda ev, d: unlocks_daily(ev, d, tz),
        Category.LIGHT: lambda ev, d: light_daily(ev, d, tz),
        Category.LOCATION: lambda ev, d: location_daily(ev, places, stays, d, tz, cfg.max_speed_kmh),
        Category.NOISE: lambda ev, d: noise_daily(ev, d, tz, noise_minmax, cfg.silence_threshold_db),
        Category.PEDOMETER: lambda ev, d: pedometer_daily(ev, d, tz),
    }

    records = []
    for day in active_days:
        values = {}
        for c in Category:
            if c in present:
                raw = daily_fns[c](per_day[c].get(day, []), day)
            else:
                raw = dict.fromkeys(DAILY_BASES[c])
            for base in DAILY_BASES[c]:
                values[f"{c.value}.{base}"] = raw[base]
        records.append(DailyRecord(participant_id, day, day_type_of(day), values))

    routine: dict[DayType, float | None] = {}
    loc_days = per_day[Category.LOCATION]
    for t in DAY_TYPES:
        sets = [visited_places(places, d, tz) for d in sorted(loc_days) if day_type_of(d) is t]
        try:
            routine[t] = routine_index(sets)
        except Insufficient:
            routine[t] = None

    vector = aggregate(records, routine, participant_id)
    return ParticipantFeatures(vector, tuple(records), present)


def extract_for(participant: Participant, event_log: EventLog,
                config: FeatureConfig | None = None) -> ParticipantFeatures:
    return extract_participant(participant.id, event_log, participant.tz_offset_minutes, config)


def _extract_entry(job):
    entry, window, config = job
    try:
        log = parse_event_log(entry.log_path, window, entry.participant.id)
    except (OSError, ParseError) as exc:
        raise ParseError(f"participant {entry.participant.id}: {exc}") from exc
    return extract_for(entry.participant, log, config)


def _extract_pair(job):
    participant, log, config = job
    return extract_for(participant, log, config)


def _run(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def extract_cohort(participants, event_logs, config: FeatureConfig | None = None,
                   workers: int = 1) -> tuple[CohortMatrix, list[ParticipantFeatures]]:
    """Feature matrix for in-memory logs, rows in participant order."""
    participants = list(participants)
    jobs = [(p, log, config) for p, log in zip(participants, event_logs, strict=True)]
    results = _run(_extract_pair, jobs, workers)
    return _to_matrix(participants, results), results


def extract_manifest(manifest: CohortManifest, config: FeatureConfig | None = None,
                     workers: int = 1) -> tuple[CohortMatrix, list[ParticipantFeatures]]:
    """Parse and extract each listed log; workers parse their own logs."""
    jobs = [(e, manifest.window, config) for e in manifest.entries]
    results = _run(_extract_entry, jobs, workers)
    return _to_matrix(manifest.participants, results), results


def _to_matrix(participants, results) -> CohortMatrix:
    names = feature_names()
    grid = (np.vstack([r.vector.as_array() for r in results]) if results
            else np.empty((0, len(names))))
    return CohortMatrix(tuple(p.id for p in participants), tuple(names), grid,
                        participants=tuple(participants))


def extraction_report(participants, results) -> list[dict]:
    """Per category: how many participants lack the stream entirely."""
    participants = list(participants)
    n = len(participants)
    rows = []
    for c in Category:
        missing = sum(1 for r in results if c not in r.categories_present)
        rows.append({"category": c.value, "participants": n, "missing": missing,
                     "missing_rate": missing / n if n else 0.0})
    return rows


def write_report(rows: list[dict], path) -> None:
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
