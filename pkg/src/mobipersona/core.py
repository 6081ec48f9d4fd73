"""Shared domain vocabulary: participants, sensor events, traits and calendar buckets."""

from __future__ import annotations

import datetime as dt
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Union

import numpy as np

from .errors import BadResponse, DegenerateSplit

MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000
MAX_TZ_OFFSET_MINUTES = 14 * 60

# Local logical days start at 04:00 so that a night (22:00-04:00) stays whole.
DAY_START_HOUR = 4

# Prefix of the binary country indicator columns.
COUNTRY_FLAG_PREFIX = "country."

LOW = 0
HIGH = 1


class Country(str, Enum):
    UK = "UK"
    ES = "ES"
    PE = "PE"
    CO = "CO"
    CL = "CL"


class Gender(str, Enum):
    FEMALE = "female"
    MALE = "male"


class AgeRange(str, Enum):
    A18_25 = "18-25"
    A26_34 = "26-34"
    A35_44 = "35-44"


class Education(str, Enum):
    NONE = "no_education"
    PRIMARY = "primary_school"
    SECONDARY = "secondary_school"
    TECHNICAL = "technical_school"
    BACHELOR = "bachelor"
    MASTER = "master"
    PHD = "phd"
    OTHER = "other"


class Employment(str, Enum):
    EMPLOYED = "employed"
    UNEMPLOYED_SEEKING = "unemployed_job_hunting"
    UNEMPLOYED_NOT_SEEKING = "unemployed_not_job_hunting"
    BACHELOR_STUDENT = "bachelor_student"
    MASTER_STUDENT = "master_student"
    RETIRED = "retired"
    HOMEMAKER = "homemaker"
    OTHER = "other"


STUDENT_EMPLOYMENT = frozenset({Employment.BACHELOR_STUDENT, Employment.MASTER_STUDENT})


class Trait(str, Enum):
    EXTRAVERSION = "extraversion"
    AGREEABLENESS = "agreeableness"
    CONSCIENTIOUSNESS = "conscientiousness"
    NEUROTICISM = "neuroticism"
    OPENNESS = "openness"


class Category(str, Enum):
    ACCELEROMETER = "accelerometer"
    BATTERY = "battery"
    CALLS = "calls"
    UNLOCKS = "unlocks"
    LIGHT = "light"
    LOCATION = "location"
    NOISE = "noise"
    PEDOMETER = "pedometer"


class DayPeriod(str, Enum):
    MORNING = "morning"
    AFTERNOON = "afternoon"
    EVENING = "evening"
    NIGHT = "night"
    ENTIRE_DAY = "entire_day"


PERIODS = (DayPeriod.MORNING, DayPeriod.AFTERNOON, DayPeriod.EVENING, DayPeriod.NIGHT)
PERIODS_AND_DAY = PERIODS + (DayPeriod.ENTIRE_DAY,)

# Period bounds as hours after the 04:00 day start: [start, end).
PERIOD_BOUNDS = {
    DayPeriod.MORNING: (0, 8),
    DayPeriod.AFTERNOON: (8, 14),
    DayPeriod.EVENING: (14, 18),
    DayPeriod.NIGHT: (18, 24),
    DayPeriod.ENTIRE_DAY: (0, 24),
}


class DayType(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


# Event payloads ------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class AccelBurst:
    samples: tuple[tuple[float, float, float, float], ...]  # (dt_ms, x, y, z)


@dataclass(frozen=True, slots=True)
class BatteryReading:
    level: float
    charging: bool


@dataclass(frozen=True, slots=True)
class CallRecord:
    direction: str  # incoming | outgoing | missed | rejected
    duration_s: float
    correspondent: str


@dataclass(frozen=True, slots=True)
class ScreenEvent:
    kind: str  # screen_on | screen_off | unlock | lock


@dataclass(frozen=True, slots=True)
class LightReading:
    lux: float


@dataclass(frozen=True, slots=True)
class LocationFix:
    lat: float
    lon: float
    accuracy_m: float


@dataclass(frozen=True, slots=True)
class NoiseReading:
    db: float


@dataclass(frozen=True, slots=True)
class StepCount:
    steps: int


Payload = Union[AccelBurst, BatteryReading, CallRecord, ScreenEvent, LightReading,
                LocationFix, NoiseReading, StepCount]

PAYLOAD_TYPES = {
    Category.ACCELEROMETER: AccelBurst,
    Category.BATTERY: BatteryReading,
    Category.CALLS: CallRecord,
    Category.UNLOCKS: ScreenEvent,
    Category.LIGHT: LightReading,
    Category.LOCATION: LocationFix,
    Category.NOISE: NoiseReading,
    Category.PEDOMETER: StepCount,
}

CALL_DIRECTIONS = ("incoming", "outgoing", "missed", "rejected")
SCREEN_KINDS = ("screen_on", "screen_off", "unlock", "lock")


@dataclass(frozen=True, slots=True)
class SensorEvent:
    category: Category
    timestamp_ms: int  # UTC epoch milliseconds
    payload: Payload

    def __post_init__(self):
        expected = PAYLOAD_TYPES[self.category]
        if not isinstance(self.payload, expected):
            raise TypeError(f"{self.category.value} event needs {expected.__name__} payload")


@dataclass(frozen=True)
class Participant:
    id: str
    country: Country
    gender: Gender
    age_range: AgeRange
    education: Education
    employment: Employment
    responses: tuple[int, ...]
    tz_offset_minutes: int = 0

    def __post_init__(self):
        if len(self.responses) != 50:
            raise BadResponse(f"{self.id}: expected 50 responses, got {len(self.responses)}")
        for i, r in enumerate(self.responses):
            if not isinstance(r, (int, np.integer)) or not 1 <= r <= 5:
                raise BadResponse(f"{self.id}: response {i + 1} = {r!r} outside [1, 5]")
        if abs(self.tz_offset_minutes) > MAX_TZ_OFFSET_MINUTES:
            raise ValueError(f"{self.id}: tz offset {self.tz_offset_minutes} out of range")

    @property
    def is_student(self) -> bool:
        return self.employment in STUDENT_EMPLOYMENT


# Calendar buckets ----------------------------------------------------------

EPOCH = dt.date(1970, 1, 1)


def local_day_index(timestamp_ms, tz_offset_minutes):
    """Days since epoch of the local date owning each timestamp's bucket."""
    local = np.asarray(timestamp_ms, dtype=np.int64) + tz_offset_minutes * MS_PER_MINUTE
    return np.floor_divide(local - DAY_START_HOUR * MS_PER_HOUR, MS_PER_DAY)


def day_start_ms(day_index, tz_offset_minutes):
    """UTC instant at which the logical day ``day_index`` begins (04:00 local)."""
    return (np.asarray(day_index, dtype=np.int64) * MS_PER_DAY
            + DAY_START_HOUR * MS_PER_HOUR - tz_offset_minutes * MS_PER_MINUTE)


def period_codes(timestamp_ms, tz_offset_minutes):
    """Period index (0 morning .. 3 night) for each timestamp."""
    local = np.asarray(timestamp_ms, dtype=np.int64) + tz_offset_minutes * MS_PER_MINUTE
    hour = np.mod(local - DAY_START_HOUR * MS_PER_HOUR, MS_PER_DAY) // MS_PER_HOUR
    return np.searchsorted(np.array([8, 14, 18]), hour, side="right")


def day_type_of(day_index) -> DayType:
    return DayType.WEEKEND if day_date(day_index).weekday() >= 5 else DayType.WEEKDAY


def day_date(day_index) -> dt.date:
    return EPOCH + dt.timedelta(days=int(day_index))


def assign_bucket(timestamp_ms: int, tz_offset_minutes: int) -> tuple[dt.date, DayPeriod, DayType]:
    """Map a UTC instant to its owning local date, day period and day type.

    Night events between midnight and 04:00 belong to the previous local date.
    """
    if abs(tz_offset_minutes) > MAX_TZ_OFFSET_MINUTES:
        raise ValueError(f"tz offset {tz_offset_minutes} outside +-14h")
    day = int(local_day_index(timestamp_ms, tz_offset_minutes))
    period = PERIODS[int(period_codes(timestamp_ms, tz_offset_minutes))]
    return day_date(day), period, day_type_of(day)


# Median split --------------------------------------------------------------

class LabelSplit(NamedTuple):
    median: float
    labels: np.ndarray  # LOW / HIGH per participant
    n_low: int
    n_high: int


def trait_class_labels(scores, trait: Trait | None = None) -> LabelSplit:
    """Split scores at the sample median; a score equal to the median is low.

    ``scores`` is either a sequence of numbers or, with ``trait`` given, a
    sequence of per-trait score mappings.
    """
    if trait is not None:
        scores = [s[Trait(trait)] for s in scores]
    values = np.asarray(scores, dtype=float)
    if values.size < 2:
        raise DegenerateSplit("need at least two participants")
    median = float(np.median(values))
    labels = np.where(values <= median, LOW, HIGH).astype(np.int8)
    n_high = int(labels.sum())
    n_low = int(values.size - n_high)
    if n_low == 0 or n_high == 0:
        raise DegenerateSplit(f"median {median} leaves one class empty")
    return LabelSplit(median, labels, n_low, n_high)


# Seed derivation -------------------------------------------------------------

def _seed_word(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode())
    return int(key)


def derive_seed(seed: int, *keys) -> int:
    """A 32-bit seed for the stream identified by ``keys`` under ``seed``.

    Keys may be ints or strings; distinct key tuples give independent streams.
    """
    words = [int(seed)] + [_seed_word(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def rng_for(seed: int, *keys) -> np.random.Generator:
    words = [int(seed)] + [_seed_word(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(words))
