"""Read and write the cohort manifest and per-participant event logs.

Manifest: ``#``-prefixed ``key=value`` preamble lines carrying the study window,
then a CSV header and one row per participant::

    # study_start=2018-03-04T12:00:00.000+00:00
    # study_end=2018-03-26T12:00:00.000+00:00
    id,country,gender,age_range,education,employment,tz_offset_minutes,r01,...,r50,log_path

Event log: one JSON object per line with ``cat``, ``ts`` (ISO-8601 with offset)
and the category payload fields. Accelerometer bursts carry
``samples: [[dt_ms, x, y, z], ...]``.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    CALL_DIRECTIONS,
    SCREEN_KINDS,
    AccelBurst,
    AgeRange,
    BatteryReading,
    CallRecord,
    Category,
    Country,
    Education,
    Employment,
    Gender,
    LightReading,
    LocationFix,
    MS_PER_DAY,
    NoiseReading,
    Participant,
    ScreenEvent,
    SensorEvent,
    StepCount,
)
from .errors import BadResponse, DuplicateId, EmptyCohort, ParseError

log = logging.getLogger(__name__)

STUDY_DAYS = 21
RESPONSE_COLUMNS = [f"r{i:02d}" for i in range(1, 51)]
MANIFEST_COLUMNS = (["id", "country", "gender", "age_range", "education", "employment",
                     "tz_offset_minutes"] + RESPONSE_COLUMNS + ["log_path"])
CATEGORY_ORDER = {c: i for i, c in enumerate(Category)}

_UTC = dt.timezone.utc
_EPOCH = dt.datetime(1970, 1, 1, tzinfo=_UTC)
_MS = dt.timedelta(milliseconds=1)


def format_instant(timestamp_ms: int, tz_offset_minutes: int = 0) -> str:
    tz = dt.timezone(dt.timedelta(minutes=tz_offset_minutes))
    moment = (_EPOCH + dt.timedelta(milliseconds=int(timestamp_ms))).astimezone(tz)
    return moment.isoformat(timespec="milliseconds")


def parse_instant(text: str) -> int:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    moment = dt.datetime.fromisoformat(text)
    if moment.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC offset")
    return (moment - _EPOCH) // _MS


# Manifest -------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    participant: Participant
    log_path: Path


@dataclass(frozen=True)
class CohortManifest:
    entries: tuple[ManifestEntry, ...]
    study_start_ms: int
    study_end_ms: int

    def __post_init__(self):
        if self.study_end_ms - self.study_start_ms < MS_PER_DAY:
            raise ParseError("study window shorter than one day")
        ids = [e.participant.id for e in self.entries]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateId(f"duplicate participant ids: {dup}")

    @property
    def participants(self) -> list[Participant]:
        return [e.participant for e in self.entries]

    @property
    def window(self) -> tuple[int, int]:
        return self.study_start_ms, self.study_end_ms


def parse_manifest(path) -> CohortManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from exc
    lines = text.splitlines()
    meta = {}
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, value = line[1:].strip().partition("=")
        meta[key.strip()] = value.strip()
    else:
        body_start = len(lines)
    body = [ln for ln in lines[body_start:] if ln.strip()]
    if not body:
        raise ParseError("manifest is empty", line=1)
    for key in ("study_start", "study_end"):
        if key not in meta:
            raise ParseError(f"missing '# {key}=' preamble line", line=1)
    try:
        start = parse_instant(meta["study_start"])
        end = parse_instant(meta["study_end"])
    except ValueError as exc:
        raise ParseError(f"bad study window: {exc}", line=1) from exc

    reader = csv.reader(body)
    header = next(reader)
    header_line = body_start + 1
    if header != MANIFEST_COLUMNS:
        missing = [c for c in MANIFEST_COLUMNS if c not in header]
        raise ParseError(f"unexpected header, missing {missing}" if missing
                         else "unexpected header column order", line=header_line)

    entries = []
    seen = set()
    for offset, row in enumerate(reader, start=1):
        lineno = header_line + offset
        if len(row) != len(MANIFEST_COLUMNS):
            raise ParseError(f"expected {len(MANIFEST_COLUMNS)} fields, got {len(row)}",
                             line=lineno)
        rec = dict(zip(MANIFEST_COLUMNS, row))
        pid = rec["id"].strip()
        if not pid:
            raise ParseError("empty id", line=lineno, field="id")
        if pid in seen:
            raise DuplicateId(f"participant id {pid!r} repeated at line {lineno}")
        seen.add(pid)
        entries.append(ManifestEntry(_participant_from_row(rec, lineno),
                                     (path.parent / rec["log_path"]).resolve()
                                     if rec["log_path"] else Path()))
    if not entries:
        raise EmptyCohort("manifest has no participant rows")
    return CohortManifest(tuple(entries), start, end)


def _participant_from_row(rec: dict, lineno: int) -> Participant:
    def enum_field(name, enum):
        try:
            return enum(rec[name].strip())
        except ValueError:
            raise ParseError(f"unknown value {rec[name]!r}", line=lineno, field=name) from None

    def int_field(name):
        try:
            return int(rec[name])
        except ValueError:
            raise ParseError(f"not an integer: {rec[name]!r}", line=lineno, field=name) from None

    responses = tuple(int_field(c) for c in RESPONSE_COLUMNS)
    try:
        return Participant(
            id=rec["id"].strip(),
            country=enum_field("country", Country),
            gender=enum_field("gender", Gender),
            age_range=enum_field("age_range", AgeRange),
            education=enum_field("education", Education),
            employment=enum_field("employment", Employment),
            responses=responses,
            tz_offset_minutes=int_field("tz_offset_minutes"),
        )
    except (BadResponse, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), line=lineno) from exc


def write_manifest(manifest: CohortManifest, path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# study_start={format_instant(manifest.study_start_ms)}\n")
        fh.write(f"# study_end={format_instant(manifest.study_end_ms)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in manifest.entries:
            p = e.participant
            try:
                rel = os.path.relpath(e.log_path, path.parent)
            except ValueError:
                rel = str(e.log_path)
            writer.writerow([p.id, p.country.value, p.gender.value, p.age_range.value,
                             p.education.value, p.employment.value, p.tz_offset_minutes,
                             *p.responses, rel])


# Event logs -----------------------------------------------------------------

@dataclass(frozen=True)
class EventLog:
    participant_id: str
    events: tuple[SensorEvent, ...]
    dropped_outside_window: int = field(default=0, compare=False)
    malformed_lines: int = field(default=0, compare=False)

    @property
    def categories(self) -> frozenset[Category]:
        return frozenset(e.category for e in self.events)

    def of(self, category: Category) -> list[SensorEvent]:
        return [e for e in self.events if e.category is category]


def event_sort_key(event: SensorEvent):
    return (event.timestamp_ms, CATEGORY_ORDER[event.category], repr(event.payload))


def _canonical_order(events: list) -> list:
    """Sort by ``event_sort_key``; payload reprs are only built to break ties."""
    events.sort(key=lambda e: (e.timestamp_ms, CATEGORY_ORDER[e.category]))
    i = 0
    n = len(events)
    while i < n:
        j = i + 1
        head = (events[i].timestamp_ms, events[i].category)
        while j < n and (events[j].timestamp_ms, events[j].category) == head:
            j += 1
        if j - i > 1:
            events[i:j] = sorted(events[i:j], key=lambda e: repr(e.payload))
        i = j
    return events


def make_event_log(participant_id: str, events, window=None) -> EventLog:
    """Sort events into canonical order, dropping those outside ``window``."""
    kept = []
    dropped = 0
    for e in events:
        if window is not None and not window[0] <= e.timestamp_ms < window[1]:
            dropped += 1
            continue
        kept.append(e)
    kept = _canonical_order(kept)
    return EventLog(participant_id, tuple(kept), dropped_outside_window=dropped)


def payload_to_dict(event: SensorEvent) -> dict:
    p = event.payload
    c = event.category
    if c is Category.ACCELEROMETER:
        return {"samples": [list(s) for s in p.samples]}
    if c is Category.BATTERY:
        return {"level": p.level, "charging": p.charging}
    if c is Category.CALLS:
        return {"direction": p.direction, "duration_s": p.duration_s, "peer": p.correspondent}
    if c is Category.UNLOCKS:
        return {"kind": p.kind}
    if c is Category.LIGHT:
        return {"lux": p.lux}
    if c is Category.LOCATION:
        return {"lat": p.lat, "lon": p.lon, "acc": p.accuracy_m}
    if c is Category.NOISE:
        return {"db": p.db}
    return {"steps": p.steps}


def _nonneg(value, name):
    value = float(value)
    if not value >= 0:
        raise ValueError(f"{name} must be >= 0")
    return value


def payload_from_dict(category: Category, rec: dict):
    if category is Category.ACCELEROMETER:
        samples = tuple((float(s[0]), float(s[1]), float(s[2]), float(s[3]))
                        for s in rec["samples"])
        if not samples:
            raise ValueError("empty accelerometer burst")
        return AccelBurst(samples)
    if category is Category.BATTERY:
        level = float(rec["level"])
        if not 0 <= level <= 100:
            raise ValueError("battery level outside [0, 100]")
        if not isinstance(rec["charging"], bool):
            raise ValueError("charging must be a boolean")
        return BatteryReading(level, rec["charging"])
    if category is Category.CALLS:
        if rec["direction"] not in CALL_DIRECTIONS:
            raise ValueError(f"bad call direction {rec['direction']!r}")
        return CallRecord(rec["direction"], _nonneg(rec["duration_s"], "duration"),
                          str(rec["peer"]))
    if category is Category.UNLOCKS:
        if rec["kind"] not in SCREEN_KINDS:
            raise ValueError(f"bad screen event kind {rec['kind']!r}")
        return ScreenEvent(rec["kind"])
    if category is Category.LIGHT:
        return LightReading(_nonneg(rec["lux"], "lux"))
    if category is Category.LOCATION:
        lat, lon = float(rec["lat"]), float(rec["lon"])
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            raise ValueError("coordinates out of range")
        return LocationFix(lat, lon, _nonneg(rec["acc"], "accuracy"))
    if category is Category.NOISE:
        return NoiseReading(_nonneg(rec["db"], "noise level"))
    steps = rec["steps"]
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 0:
        raise ValueError("steps must be a non-negative integer")
    return StepCount(steps)


def event_to_line(event: SensorEvent, tz_offset_minutes: int = 0) -> str:
    rec = {"cat": event.category.value, "ts": format_instant(event.timestamp_ms, tz_offset_minutes)}
    rec.update(payload_to_dict(event))
    return json.dumps(rec, separators=(",", ":"))


def event_from_line(line: str) -> SensorEvent:
    rec = json.loads(line)
    category = Category(rec["cat"])
    return SensorEvent(category, parse_instant(rec["ts"]), payload_from_dict(category, rec))


def write_event_log(event_log: EventLog, path, tz_offset_minutes: int = 0) -> None:
    with open(path, "w") as fh:
        for e in event_log.events:
            fh.write(event_to_line(e, tz_offset_minutes))
            fh.write("\n")


def parse_event_log(path, study_window=None, participant_id: str | None = None,
                    max_malformed_fraction: float = 0.01) -> EventLog:
    """Parse a JSON-lines event log.

    Malformed lines are skipped and counted; more than ``max_malformed_fraction``
    of them raises ParseError.
    """
    path = Path(path)
    events = []
    bad = []
    total = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                events.append(event_from_line(line))
            except (ValueError, KeyError, TypeError, IndexError) as exc:
                bad.append((lineno, exc))
    if total and len(bad) / total > max_malformed_fraction:
        lineno, exc = bad[0]
        raise ParseError(f"{len(bad)}/{total} malformed lines in {path.name}; first: {exc}",
                         line=lineno)
    for lineno, exc in bad:
        log.warning("%s:%d skipped malformed line: %s", path.name, lineno, exc)
    pid = participant_id if participant_id is not None else path.stem
    result = make_event_log(pid, events, study_window)
    if result.dropped_outside_window:
        log.info("%s: dropped %d events outside study window", pid,
                 result.dropped_outside_window)
    return EventLog(pid, result.events, result.dropped_outside_window, len(bad))


def _parse_entry(args):
    entry, window, tolerance = args
    return parse_event_log(entry.log_path, window, entry.participant.id, tolerance)


def load_event_logs(manifest: CohortManifest, workers: int = 1,
                    max_malformed_fraction: float = 0.01) -> list[EventLog]:
    """Parse every participant log listed in the manifest, in manifest order."""
    jobs = [(e, manifest.window, max_malformed_fraction) for e in manifest.entries]
    if workers <= 1:
        return [_parse_with_context(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_parse_with_context, jobs, chunksize=4))


def _parse_with_context(job):
    try:
        return _parse_entry(job)
    except (OSError, ParseError) as exc:
        raise ParseError(f"participant {job[0].participant.id}: {exc}") from exc
