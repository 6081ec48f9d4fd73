"""Seeded synthetic cohorts: demographics, questionnaire responses and sensor logs.

Trait scores are drawn per country and questionnaire responses are solved
back from them, so re-scoring reproduces the drawn scores exactly. Daily
behaviour follows a per-participant latent level for each behaviour family:

    level_f = N(0, 1) + sum over effects on f of
              size * z_trait * (1 - modulation + modulation * country_factor)

where ``z_trait`` standardizes the participant's score against the whole
population. Each family drives one sensor category.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    MS_PER_DAY,
    MS_PER_HOUR,
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
    NoiseReading,
    Participant,
    ScreenEvent,
    SensorEvent,
    StepCount,
    Trait,
    day_start_ms,
    day_type_of,
    DayType,
    rng_for,
)
from .errors import ConfigError
from .ingest import (
    CohortManifest,
    EventLog,
    ManifestEntry,
    make_event_log,
    write_event_log,
    write_manifest,
)
from .psychometrics import LIKERT_MAX, LIKERT_MIN, ScoringKey, default_key

# Calibration tables ------------------------------------------------------------

COUNTRY_COUNTS = {Country.UK: 27, Country.ES: 69, Country.PE: 25, Country.CO: 21, Country.CL: 24}

AGE_COUNTS = {
    Country.UK: {AgeRange.A18_25: 6, AgeRange.A26_34: 21, AgeRange.A35_44: 0},
    Country.ES: {AgeRange.A18_25: 19, AgeRange.A26_34: 48, AgeRange.A35_44: 2},
    Country.PE: {AgeRange.A18_25: 1, AgeRange.A26_34: 20, AgeRange.A35_44: 4},
    Country.CO: {AgeRange.A18_25: 2, AgeRange.A26_34: 13, AgeRange.A35_44: 6},
    Country.CL: {AgeRange.A18_25: 2, AgeRange.A26_34: 16, AgeRange.A35_44: 6},
}

GENDER_COUNTS = {
    Country.UK: {Gender.FEMALE: 10, Gender.MALE: 17},
    Country.ES: {Gender.FEMALE: 16, Gender.MALE: 53},
    Country.PE: {Gender.FEMALE: 10, Gender.MALE: 15},
    Country.CO: {Gender.FEMALE: 10, Gender.MALE: 11},
    Country.CL: {Gender.FEMALE: 8, Gender.MALE: 16},
}

_E = Education
EDUCATION_COUNTS = {
    Country.UK: {_E.SECONDARY: 9, _E.TECHNICAL: 3, _E.BACHELOR: 9, _E.MASTER: 3, _E.PHD: 2,
                 _E.OTHER: 1},
    Country.ES: {_E.SECONDARY: 16, _E.TECHNICAL: 18, _E.BACHELOR: 25, _E.MASTER: 6, _E.OTHER: 4},
    Country.PE: {_E.SECONDARY: 2, _E.TECHNICAL: 14, _E.BACHELOR: 8, _E.OTHER: 1},
    Country.CO: {_E.NONE: 1, _E.SECONDARY: 3, _E.TECHNICAL: 13, _E.BACHELOR: 2, _E.MASTER: 2},
    Country.CL: {_E.SECONDARY: 9, _E.TECHNICAL: 12, _E.BACHELOR: 2, _E.MASTER: 1},
}

_J = Employment
# The Spain employment counts sum to 67 of 69 as given; one employed participant
# and one homemaker are added so every column matches the cohort totals.
EMPLOYMENT_COUNTS = {
    Country.UK: {_J.EMPLOYED: 13, _J.UNEMPLOYED_SEEKING: 3, _J.UNEMPLOYED_NOT_SEEKING: 5,
                 _J.BACHELOR_STUDENT: 4, _J.OTHER: 2},
    Country.ES: {_J.EMPLOYED: 13, _J.UNEMPLOYED_SEEKING: 9, _J.BACHELOR_STUDENT: 39,
                 _J.MASTER_STUDENT: 3, _J.HOMEMAKER: 1, _J.OTHER: 4},
    Country.PE: {_J.EMPLOYED: 9, _J.UNEMPLOYED_SEEKING: 3, _J.UNEMPLOYED_NOT_SEEKING: 1,
                 _J.BACHELOR_STUDENT: 6, _J.MASTER_STUDENT: 1, _J.RETIRED: 1, _J.OTHER: 4},
    Country.CO: {_J.EMPLOYED: 8, _J.UNEMPLOYED_SEEKING: 2, _J.UNEMPLOYED_NOT_SEEKING: 1,
                 _J.BACHELOR_STUDENT: 5, _J.MASTER_STUDENT: 1, _J.RETIRED: 1, _J.HOMEMAKER: 2,
                 _J.OTHER: 1},
    Country.CL: {_J.EMPLOYED: 11, _J.UNEMPLOYED_SEEKING: 1, _J.UNEMPLOYED_NOT_SEEKING: 3,
                 _J.BACHELOR_STUDENT: 7, _J.MASTER_STUDENT: 1, _J.OTHER: 1},
}

_T = Trait
# (mean, std) of each trait score per country.
TRAIT_GAUSSIANS = {
    Country.UK: {_T.EXTRAVERSION: (27.72, 9.58), _T.AGREEABLENESS: (39.03, 7.26),
                 _T.CONSCIENTIOUSNESS: (33.65, 6.16), _T.NEUROTICISM: (27.09, 8.23),
                 _T.OPENNESS: (36.03, 6.15)},
    Country.ES: {_T.EXTRAVERSION: (30.48, 7.37), _T.AGREEABLENESS: (40.17, 5.43),
                 _T.CONSCIENTIOUSNESS: (33.18, 5.45), _T.NEUROTICISM: (28.67, 7.83),
                 _T.OPENNESS: (36.46, 4.79)},
    Country.PE: {_T.EXTRAVERSION: (31.33, 5.91), _T.AGREEABLENESS: (38.76, 4.67),
                 _T.CONSCIENTIOUSNESS: (34.87, 5.67), _T.NEUROTICISM: (30.80, 6.36),
                 _T.OPENNESS: (37.54, 4.26)},
    Country.CO: {_T.EXTRAVERSION: (29.84, 6.75), _T.AGREEABLENESS: (38.37, 4.58),
                 _T.CONSCIENTIOUSNESS: (36.60, 5.00), _T.NEUROTICISM: (32.70, 7.51),
                 _T.OPENNESS: (38.5, 4.62)},
    Country.CL: {_T.EXTRAVERSION: (29.22, 6.83), _T.AGREEABLENESS: (39.14, 5.58),
                 _T.CONSCIENTIOUSNESS: (35.31, 4.71), _T.NEUROTICISM: (29.56, 8.23),
                 _T.OPENNESS: (36.62, 5.31)},
}

# Whole-cohort (mean, std) used to standardize scores before applying effects.
POPULATION_TRAIT_STATS = {_T.EXTRAVERSION: (30.01, 7.42), _T.AGREEABLENESS: (39.50, 5.56),
                          _T.CONSCIENTIOUSNESS: (34.17, 5.55), _T.NEUROTICISM: (29.34, 7.83),
                          _T.OPENNESS: (36.81, 5.01)}

# Share of participants missing each category in the reference cohort.
DEFAULT_OPT_OUT = {Category.LOCATION: 0.156, Category.NOISE: 0.094, Category.CALLS: 0.390,
                   Category.ACCELEROMETER: 0.348, Category.UNLOCKS: 0.3025,
                   Category.LIGHT: 0.158, Category.PEDOMETER: 0.469, Category.BATTERY: 0.0}

CITY_CENTRES = {Country.UK: (51.5074, -0.1278), Country.ES: (40.4168, -3.7038),
                Country.PE: (-12.0464, -77.0428), Country.CO: (4.7110, -74.0721),
                Country.CL: (-33.4489, -70.6693)}

TZ_OFFSETS = {Country.UK: 0, Country.ES: 60, Country.PE: -300, Country.CO: -300, Country.CL: -180}

# European cohorts live in quieter surroundings than the South American ones.
NOISE_BASELINE_DB = {Country.UK: 48.0, Country.ES: 48.0, Country.PE: 55.0, Country.CO: 55.0,
                     Country.CL: 55.0}

DEFAULT_COUNTRY_FACTOR = {Country.UK: 1.0, Country.ES: 1.0, Country.PE: -1.0, Country.CO: -1.0,
                          Country.CL: -1.0}

FAMILIES = {
    "noise": Category.NOISE,
    "calls": Category.CALLS,
    "unlocks": Category.UNLOCKS,
    "mobility": Category.LOCATION,
    "steps": Category.PEDOMETER,
    "activity": Category.ACCELEROMETER,
    "light": Category.LIGHT,
    "battery": Category.BATTERY,
}

WORKING = frozenset({Employment.EMPLOYED, Employment.BACHELOR_STUDENT, Employment.MASTER_STUDENT})


@dataclass(frozen=True)
class Effect:
    family: str
    trait: Trait
    size: float
    modulation: float = 0.0  # 0: same effect everywhere, 1: fully country-dependent

    def __post_init__(self):
        object.__setattr__(self, "trait", Trait(self.trait))
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown behaviour family {self.family!r}")
        if not math.isfinite(self.size):
            raise ConfigError(f"effect size must be finite, got {self.size}")
        if not 0.0 <= self.modulation <= 1.0:
            raise ConfigError(f"modulation must lie in [0, 1], got {self.modulation}")


DEFAULT_EFFECTS = (
    Effect("noise", Trait.EXTRAVERSION, 0.6),
    Effect("calls", Trait.EXTRAVERSION, 0.6),
    Effect("mobility", Trait.EXTRAVERSION, 0.4),
    Effect("unlocks", Trait.NEUROTICISM, 0.5),
    Effect("light", Trait.NEUROTICISM, -0.3),
    Effect("steps", Trait.CONSCIENTIOUSNESS, 0.5),
    Effect("activity", Trait.CONSCIENTIOUSNESS, 0.3),
    Effect("calls", Trait.AGREEABLENESS, 0.4),
    Effect("mobility", Trait.OPENNESS, 0.5),
    Effect("noise", Trait.OPENNESS, 0.3),
)


def _enum_map(enum, mapping, what):
    try:
        return {enum(k): v for k, v in mapping.items()}
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from exc


@dataclass(frozen=True)
class GeneratorConfig:
    country_counts: dict = field(default_factory=lambda: dict(COUNTRY_COUNTS))
    trait_gaussians: dict = field(default_factory=lambda: {c: dict(t) for c, t in
                                                           TRAIT_GAUSSIANS.items()})
    effects: tuple = DEFAULT_EFFECTS
    country_factor: dict = field(default_factory=lambda: dict(DEFAULT_COUNTRY_FACTOR))
    opt_out: dict = field(default_factory=lambda: dict(DEFAULT_OPT_OUT))
    gap_prob: float = 0.02  # chance a present category records nothing on a given day
    study_days: int = 21
    study_start: str = "2018-03-05"
    sample_minutes: int = 15
    bursts_per_day: int = 8
    burst_seconds: int = 30
    burst_hz: float = 5.0
    seed: int = 0

    def __post_init__(self):
        counts = _enum_map(Country, self.country_counts, "country_counts")
        if any(int(n) != n or n < 0 for n in counts.values()):
            raise ConfigError("country counts must be non-negative integers")
        counts = {c: int(counts.get(c, 0)) for c in Country}
        if sum(counts.values()) == 0:
            raise ConfigError("the cohort must contain at least one participant")
        gauss = {}
        for c, per in _enum_map(Country, self.trait_gaussians, "trait_gaussians").items():
            gauss[c] = {}
            for t, ms in _enum_map(Trait, per, "trait_gaussians").items():
                mean, std = (float(v) for v in ms)
                if std < 0 or not math.isfinite(mean) or not math.isfinite(std):
                    raise ConfigError(f"bad trait gaussian for {c.value}/{t.value}: {ms}")
                gauss[c][t] = (mean, std)
        for c in Country:
            if counts[c] and set(gauss.get(c, {})) != set(Trait):
                raise ConfigError(f"trait_gaussians for {c.value} must cover all five traits")
        effects = tuple(e if isinstance(e, Effect) else Effect(**e) for e in self.effects)
        factor = _enum_map(Country, self.country_factor, "country_factor")
        factor = {c: float(factor.get(c, 0.0)) for c in Country}
        opt_out = _enum_map(Category, self.opt_out, "opt_out")
        if any(not 0.0 <= p <= 1.0 for p in opt_out.values()):
            raise ConfigError("opt-out probabilities must lie in [0, 1]")
        opt_out = {c: float(opt_out.get(c, 0.0)) for c in Category}
        if not 0.0 <= self.gap_prob < 1.0:
            raise ConfigError("gap_prob must lie in [0, 1)")
        if self.study_days < 1:
            raise ConfigError("study_days must be >= 1")
        if self.sample_minutes < 1 or 1440 % self.sample_minutes:
            raise ConfigError("sample_minutes must divide a day")
        if self.bursts_per_day < 0 or self.burst_seconds < 2 or self.burst_hz <= 0:
            raise ConfigError("bad accelerometer burst settings")
        try:
            start = dt.date.fromisoformat(self.study_start)
        except ValueError as exc:
            raise ConfigError(f"study_start: {exc}") from exc
        object.__setattr__(self, "country_counts", counts)
        object.__setattr__(self, "trait_gaussians", gauss)
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "country_factor", factor)
        object.__setattr__(self, "opt_out", opt_out)
        object.__setattr__(self, "study_start", start.isoformat())

    @property
    def n_participants(self) -> int:
        return sum(self.country_counts.values())

    @property
    def first_day(self) -> int:
        return (dt.date.fromisoformat(self.study_start) - dt.date(1970, 1, 1)).days

    @property
    def window(self) -> tuple[int, int]:
        """Study window in UTC ms: half a day of slack around the logical days."""
        start = self.first_day * MS_PER_DAY - MS_PER_DAY // 2
        return start, start + (self.study_days + 1) * MS_PER_DAY

    def to_dict(self) -> dict:
        return {
            "country_counts": {c.value: n for c, n in self.country_counts.items()},
            "trait_gaussians": {c.value: {t.value: list(ms) for t, ms in per.items()}
                                for c, per in self.trait_gaussians.items()},
            "effects": [{"family": e.family, "trait": e.trait.value, "size": e.size,
                         "modulation": e.modulation} for e in self.effects],
            "country_factor": {c.value: v for c, v in self.country_factor.items()},
            "opt_out": {c.value: p for c, p in self.opt_out.items()},
            "gap_prob": self.gap_prob,
            "study_days": self.study_days,
            "study_start": self.study_start,
            "sample_minutes": self.sample_minutes,
            "bursts_per_day": self.bursts_per_day,
            "burst_seconds": self.burst_seconds,
            "burst_hz": self.burst_hz,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown generator config key(s): {', '.join(unknown)}")
        kwargs = dict(data)
        if "effects" in kwargs:
            effects = []
            for e in kwargs["effects"]:
                extra = set(e) - {"family", "trait", "size", "modulation"}
                if extra:
                    raise ConfigError(f"unknown effect key(s): {', '.join(sorted(extra))}")
                try:
                    effects.append(Effect(**e))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"bad effect {e}: {exc}") from exc
            kwargs["effects"] = tuple(effects)
        return cls(**kwargs)


def no_dropout(config: GeneratorConfig | None = None, **changes) -> GeneratorConfig:
    """A copy of ``config`` in which every participant keeps every category."""
    base = (config or GeneratorConfig()).to_dict()
    base.update({"opt_out": {}, "gap_prob": 0.0})
    base.update(changes)
    return GeneratorConfig.from_dict(base)


# Population ----------------------------------------------------------------------

def allocate(counts: dict, n: int) -> dict:
    """Scale integer ``counts`` to total ``n`` by largest remainder (ties in key order)."""
    total = sum(counts.values())
    if total == n:
        return dict(counts)
    if total == 0:
        raise ConfigError("cannot allocate from an empty table")
    quotas = {k: v * n / total for k, v in counts.items()}
    out = {k: int(math.floor(q)) for k, q in quotas.items()}
    rest = n - sum(out.values())
    order = sorted(counts, key=lambda k: -(quotas[k] - out[k]))
    for k in order[:rest]:
        out[k] += 1
    return out


def _attribute_column(table: dict, n: int, rng) -> list:
    alloc = allocate(table, n)
    values = [k for k, v in alloc.items() for _ in range(v)]
    rng.shuffle(values)
    return values


def draw_scores(mean: float, std: float, n: int, rng) -> np.ndarray:
    """Integer scores in [10, 50] whose sample mean and std follow (mean, std).

    The normal draw is standardized to zero mean and unit sample std before
    scaling, so only rounding and clipping move the moments.
    """
    z = rng.standard_normal(n)
    if n >= 2:
        z = (z - z.mean()) / z.std(ddof=1)
    else:
        z = np.zeros(n)
    return np.clip(np.rint(mean + std * z), 10, 50).astype(int)


def responses_for_scores(scores: dict, rng, key: ScoringKey | None = None,
                         item_noise: float = 0.8) -> tuple[int, ...]:
    """Questionnaire responses whose keyed trait sums equal ``scores`` exactly.

    Keyed item values scatter around score / 10 with ``item_noise`` so items
    of one trait stay correlated across participants; single items are then
    nudged by one step until the sum is exact.
    """
    key = key or default_key()
    keyed = np.zeros(50, dtype=int)
    for t in Trait:
        idx = key.item_indices(t)
        target = int(scores[t])
        if not 10 <= target <= 50:
            raise ValueError(f"score {target} for {t.value} outside [10, 50]")
        v = np.clip(np.rint(target / 10 + item_noise * rng.standard_normal(10)),
                    LIKERT_MIN, LIKERT_MAX).astype(int)
        while v.sum() != target:
            step = 1 if v.sum() < target else -1
            movable = np.flatnonzero(v < LIKERT_MAX) if step > 0 else np.flatnonzero(v > LIKERT_MIN)
            v[rng.choice(movable)] += step
        keyed[idx] = v
    raw = np.where(key.reversed_mask(), LIKERT_MAX + LIKERT_MIN - keyed, keyed)
    return tuple(int(r) for r in raw)


@dataclass(frozen=True)
class Planted:
    """Per-participant generation parameters exposed for oracle tests."""

    participant_id: str
    country: Country
    scores: dict  # Trait -> int
    levels: dict  # family -> latent level
    params: dict  # named daily behaviour parameters
    absent: frozenset  # categories the participant opted out of
    gap_days: dict  # Category -> number of days without events despite consent


def draw_population(config: GeneratorConfig) -> list[tuple[Participant, dict]]:
    """Participants with demographics and responses, plus the drawn trait scores."""
    out = []
    key = default_key()
    for c in Country:
        n = config.country_counts[c]
        if n == 0:
            continue
        cols = {
            "age": _attribute_column(AGE_COUNTS[c], n, rng_for(config.seed, "age", c.value)),
            "gender": _attribute_column(GENDER_COUNTS[c], n, rng_for(config.seed, "gender", c.value)),
            "education": _attribute_column(EDUCATION_COUNTS[c], n,
                                           rng_for(config.seed, "education", c.value)),
            "employment": _attribute_column(EMPLOYMENT_COUNTS[c], n,
                                            rng_for(config.seed, "employment", c.value)),
        }
        scores = {t: draw_scores(*config.trait_gaussians[c][t], n,
                                 rng_for(config.seed, "traits", c.value, t.value))
                  for t in Trait}
        for k in range(n):
            pid = f"{c.value}{k + 1:03d}"
            s = {t: int(scores[t][k]) for t in Trait}
            responses = responses_for_scores(s, rng_for(config.seed, "responses", pid), key)
            p = Participant(pid, c, cols["gender"][k], cols["age"][k], cols["education"][k],
                            cols["employment"][k], responses, TZ_OFFSETS[c])
            out.append((p, s))
    return out


def draw_dropout(config: GeneratorConfig, ids: list[str]) -> dict[str, frozenset]:
    """Opted-out categories per participant; exactly round(p * N) opt out of each."""
    absent = {pid: set() for pid in ids}
    n = len(ids)
    for cat in Category:
        k = int(round(config.opt_out[cat] * n))
        if k == 0:
            continue
        chosen = rng_for(config.seed, "dropout", cat.value).choice(n, size=k, replace=False)
        for i in chosen:
            absent[ids[i]].add(cat)
    return {pid: frozenset(s) for pid, s in absent.items()}


def latent_levels(config: GeneratorConfig, country: Country, scores: dict, rng) -> dict:
    levels = {f: float(rng.standard_normal()) for f in FAMILIES}
    factor = config.country_factor[country]
    for e in config.effects:
        mean, std = POPULATION_TRAIT_STATS[e.trait]
        z = (scores[e.trait] - mean) / std
        levels[e.family] += e.size * z * (1.0 - e.modulation + e.modulation * factor)
    return levels


# Behaviour simulation --------------------------------------------------------------

_M_PER_DEG = 111_320.0


def _offset(lat, lon, rng, sd_m):
    dlat = rng.normal(0, sd_m) / _M_PER_DEG
    dlon = rng.normal(0, sd_m) / (_M_PER_DEG * math.cos(math.radians(lat)))
    return lat + dlat, lon + dlon


def _distance_m(a, b):
    dy = (a[0] - b[0]) * _M_PER_DEG
    dx = (a[1] - b[1]) * _M_PER_DEG * math.cos(math.radians(a[0]))
    return math.hypot(dx, dy)


@dataclass
class _Person:
    participant: Participant
    levels: dict
    params: dict
    home: tuple
    work: tuple | None
    others: list
    peers: list
    wake: float  # local hours after midnight
    sleep: float


def _make_person(config, participant, scores, rng) -> _Person:
    lv = latent_levels(config, participant.country, scores, rng)
    params = {
        "noise_awake_db": NOISE_BASELINE_DB[participant.country] + 4.0 * lv["noise"],
        "calls_per_day": 3.0 * math.exp(0.45 * lv["calls"]),
        "unlocks_per_day": 40.0 * math.exp(0.35 * lv["unlocks"]),
        "outings_per_day": 0.9 * math.exp(0.5 * lv["mobility"]),
        "steps_per_day": 6000.0 * math.exp(0.35 * lv["steps"]),
        "activity_hz": float(np.clip(1.6 + 0.3 * lv["activity"], 0.4, 2.3)),
        "activity_amp": 1.2 * math.exp(0.3 * lv["activity"]),
        "light_log_lux": math.log(150.0) + 0.45 * lv["light"],
        "battery_drain_per_h": 5.0 * math.exp(0.3 * lv["battery"]),
    }
    centre = CITY_CENTRES[participant.country]
    home = _offset(*centre, rng, 5000)
    work = _offset(*home, rng, 4000) if participant.employment in WORKING else None
    others = [_offset(*home, rng, 3000) for _ in range(6)]
    peers = [f"p{int(rng.integers(16 ** 7)):07x}" for _ in range(15)]
    wake = float(np.clip(rng.normal(7.0, 0.6), 5.5, 9.5))
    sleep = float(np.clip(rng.normal(23.5, 0.6), 22.0, 25.5))
    return _Person(participant, lv, params, home, work, others, peers, wake, sleep)


def _timeline(person: _Person, weekend: bool, rng):
    """Stay and travel segments (hour_from, hour_to, place_a, place_b) over hours 4..28."""
    speed_m_per_h = 25_000.0
    segs = []
    here = person.home
    t = 4.0
    wake = person.wake + rng.normal(0, 0.3) + (1.0 if weekend else 0.0)
    end_of_day = min(person.sleep + rng.normal(0, 0.3), 27.0)

    def go(dest, t):
        dur = max(_distance_m(here, dest) / speed_m_per_h, 0.05)
        segs.append((t, t + dur, here, dest))
        return t + dur

    leave = wake + 1.0 + abs(rng.normal(0, 0.3))
    if person.work is not None and not weekend:
        segs.append((t, leave, here, here))
        t = go(person.work, leave)
        here = person.work
        back = 17.0 + rng.normal(0, 0.5)
        segs.append((t, back, here, here))
        t = back
    n_out = min(int(rng.poisson(person.params["outings_per_day"] * (1.3 if weekend else 1.0))), 4)
    for _ in range(n_out):
        if t > end_of_day - 1.5:
            break
        start = max(t, leave) + rng.uniform(0.0, 1.5)
        segs.append((t, start, here, here))
        dest = person.others[int(rng.integers(len(person.others)))]
        t = go(dest, start)
        here = dest
        stay = rng.uniform(0.75, 2.0)
        segs.append((t, t + stay, here, here))
        t += stay
    if here is not person.home:
        t = go(person.home, t)
        here = person.home
    segs.append((t, 28.0, here, here))
    return segs, wake, end_of_day


def _positions(segs, hours):
    """Location at each hour: the stay place, or linear interpolation while travelling."""
    starts = np.array([sg[0] for sg in segs])
    idx = np.clip(np.searchsorted(starts, hours, side="right") - 1, 0, len(segs) - 1)
    lat = np.empty(hours.size)
    lon = np.empty(hours.size)
    for k, (a, b, p, q) in enumerate(segs):
        sel = idx == k
        if not sel.any():
            continue
        f = np.clip((hours[sel] - a) / (b - a), 0.0, 1.0) if b > a else np.zeros(sel.sum())
        lat[sel] = p[0] + f * (q[0] - p[0])
        lon[sel] = p[1] + f * (q[1] - p[1])
    return lat, lon


def _events(category, times, payloads):
    return [SensorEvent(category, int(t), pl) for t, pl in zip(times, payloads)]


def simulate_day(config: GeneratorConfig, person: _Person, day: int, rng, present: set) -> list:
    """Events for one logical day of one participant, for the categories in ``present``."""
    tz = person.participant.tz_offset_minutes
    d0 = int(day_start_ms(day, tz))
    weekend = day_type_of(day) is DayType.WEEKEND
    P = person.params
    segs, wake, bedtime = _timeline(person, weekend, rng)

    def ts(hours):  # local hours after midnight -> UTC ms
        return d0 + np.rint((np.asarray(hours, dtype=float) - 4.0) * MS_PER_HOUR).astype(np.int64)

    grid = 4.0 + np.arange(0, 24 * 60, config.sample_minutes) / 60.0
    awake = (grid >= wake) & (grid < bedtime)
    events = []

    if Category.LOCATION in present:
        lat, lon = _positions(segs, grid)
        lat = lat + rng.normal(0, 12, grid.size) / _M_PER_DEG
        lon = lon + rng.normal(0, 12, grid.size) / (_M_PER_DEG * math.cos(math.radians(person.home[0])))
        acc = np.round(rng.uniform(5, 30, grid.size), 1)
        events += _events(Category.LOCATION, ts(grid),
                          [LocationFix(a, b, c) for a, b, c in
                           zip(np.round(lat, 6).tolist(), np.round(lon, 6).tolist(), acc.tolist())])
    if Category.NOISE in present:
        db = np.where(awake, P["noise_awake_db"] + rng.normal(0, 5.0, grid.size),
                      P["noise_awake_db"] - 14.0 + rng.normal(0, 3.0, grid.size))
        events += _events(Category.NOISE, ts(grid),
                          [NoiseReading(v) for v in np.round(db, 2).tolist()])
    if Category.LIGHT in present:
        mu = np.where(awake, P["light_log_lux"], math.log(2.0))
        lux = np.exp(rng.normal(mu, 0.7))
        events += _events(Category.LIGHT, ts(grid),
                          [LightReading(v) for v in np.round(lux, 2).tolist()])
    if Category.BATTERY in present:
        level = 100.0
        charging = False
        hours = np.arange(4.0, 28.0, 1.0)
        readings = []
        for h in hours:
            up = wake <= h < bedtime
            if not up and h > 12:
                charging = True
            if charging:
                level = min(100.0, level + 30.0)
            else:
                level = max(1.0, level - P["battery_drain_per_h"] * (1.0 if up else 0.3))
                if level < 15.0:
                    charging = True
            readings.append(BatteryReading(round(level, 1), charging))
            if charging and level >= 100.0 and up:
                charging = False
        events += _events(Category.BATTERY, ts(hours + 0.02), readings)
    if Category.CALLS in present:
        n = int(rng.poisson(P["calls_per_day"]))
        hours = np.sort(rng.uniform(wake, bedtime, n))
        directions = rng.choice(4, size=n, p=(0.42, 0.40, 0.14, 0.04))
        durations = np.round(np.exp(rng.normal(math.log(90.0), 0.9, n)), 1)
        peers = np.minimum(rng.geometric(0.25, n) - 1, len(person.peers) - 1)
        names = ("incoming", "outgoing", "missed", "rejected")
        events += _events(Category.CALLS, ts(hours),
                          [CallRecord(names[d], float(u) if d < 2 else 0.0, person.peers[q])
                           for d, u, q in zip(directions, durations, peers)])
    if Category.UNLOCKS in present:
        n = int(rng.poisson(P["unlocks_per_day"]))
        times = np.sort(rng.uniform(wake, bedtime, n))
        session = np.exp(rng.normal(math.log(120.0), 0.8, n)) / 3600.0
        nxt = np.append(times[1:], bedtime + 0.5)
        ends = np.minimum(times + session, times + 0.9 * (nxt - times))
        unlock, lock = ScreenEvent("unlock"), ScreenEvent("lock")
        events += _events(Category.UNLOCKS, ts(times), [unlock] * n)
        events += _events(Category.UNLOCKS, ts(ends), [lock] * n)
    if Category.PEDOMETER in present:
        daily = P["steps_per_day"] * math.exp(rng.normal(0, 0.25))
        hours = np.arange(math.ceil(wake), math.floor(bedtime), dtype=float)
        if hours.size:
            steps = rng.poisson(daily * rng.dirichlet(np.full(hours.size, 2.0)))
            keep = steps > 0
            events += _events(Category.PEDOMETER, ts(hours[keep] + 0.99),
                              [StepCount(int(v)) for v in steps[keep]])
    if Category.ACCELEROMETER in present and config.bursts_per_day:
        n_samples = int(config.burst_seconds * config.burst_hz)
        step_ms = int(round(1000.0 / config.burst_hz))
        offsets = np.arange(n_samples) * step_ms
        t_s = offsets / 1000.0
        hours = np.sort(rng.uniform(4.0, 28.0, config.bursts_per_day))
        bursts = []
        for h in hours:
            f = P["activity_hz"] * math.exp(rng.normal(0, 0.05))
            amp = P["activity_amp"] * math.exp(rng.normal(0, 0.15))
            if not wake <= h < bedtime:
                amp *= 0.1
            wave = amp * np.sin(2 * np.pi * f * t_s + rng.uniform(0, 2 * np.pi))
            xyz = np.round(np.column_stack([
                0.3 * wave + rng.normal(0, 0.15, n_samples),
                0.3 * wave + rng.normal(0, 0.15, n_samples),
                9.81 + wave + rng.normal(0, 0.15, n_samples)]), 3).tolist()
            bursts.append(AccelBurst(tuple((int(o), *v) for o, v in zip(offsets, xyz))))
        events += _events(Category.ACCELEROMETER, ts(hours), bursts)
    return events


def simulate_participant(config: GeneratorConfig, participant: Participant, scores: dict,
                         absent: frozenset) -> tuple[EventLog, Planted]:
    rng = rng_for(config.seed, "behaviour", participant.id)
    person = _make_person(config, participant, scores, rng)
    gap_rng = rng_for(config.seed, "gaps", participant.id)
    events = []
    gaps = {c: 0 for c in Category}
    for k in range(config.study_days):
        day = config.first_day + k
        present = set()
        for c in Category:
            if c in absent:
                continue
            if config.gap_prob and gap_rng.random() < config.gap_prob:
                gaps[c] += 1
            else:
                present.add(c)
        events.extend(simulate_day(config, person, day, rng, present))
    log = make_event_log(participant.id, events, config.window)
    planted = Planted(participant.id, participant.country, dict(scores), person.levels,
                      dict(person.params), absent, gaps)
    return log, planted


# Cohorts ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticCohort:
    config: GeneratorConfig
    participants: tuple[Participant, ...]
    logs: tuple[EventLog, ...]
    planted: tuple[Planted, ...]

    @property
    def window(self) -> tuple[int, int]:
        return self.config.window


def _simulate_job(job):
    config, participant, scores, absent = job
    return simulate_participant(config, participant, scores, absent)


def _jobs(config):
    population = draw_population(config)
    absent = draw_dropout(config, [p.id for p, _ in population])
    return [(config, p, s, absent[p.id]) for p, s in population]


def generate(config: GeneratorConfig | None = None, workers: int = 1) -> SyntheticCohort:
    """Draw the whole cohort; identical for any worker count."""
    config = config or GeneratorConfig()
    jobs = _jobs(config)
    if workers <= 1:
        results = [_simulate_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_job, jobs, chunksize=4))
    return SyntheticCohort(config, tuple(j[1] for j in jobs), tuple(r[0] for r in results),
                           tuple(r[1] for r in results))


def iter_cohort(config: GeneratorConfig | None = None):
    """Yield (participant, event log, planted) one participant at a time."""
    config = config or GeneratorConfig()
    for job in _jobs(config):
        log, planted = _simulate_job(job)
        yield job[1], log, planted


GROUND_TRUTH_PARAMS = ("noise_awake_db", "calls_per_day", "unlocks_per_day", "outings_per_day",
                       "steps_per_day", "activity_hz", "activity_amp", "light_log_lux",
                       "battery_drain_per_h")


def ground_truth(config: GeneratorConfig, cohort: SyntheticCohort) -> list[dict]:
    """One row per participant with drawn scores, latent levels, behaviour
    parameters and dropout decisions."""
    rows = []
    for p in cohort.planted:
        row = {"participant_id": p.participant_id, "country": p.country.value}
        row.update({f"score_{t.value}": p.scores[t] for t in Trait})
        row.update({f"level_{f}": repr(float(p.levels[f])) for f in FAMILIES})
        row.update({k: repr(float(p.params[k])) for k in GROUND_TRUTH_PARAMS})
        row["absent_categories"] = ";".join(c.value for c in Category if c in p.absent)
        row.update({f"gap_days_{c.value}": p.gap_days[c] for c in Category})
        rows.append(row)
    return rows


def write_cohort(cohort: SyntheticCohort, out_dir) -> Path:
    """Write manifest.csv, logs/<id>.jsonl and ground_truth.csv; returns the manifest path."""
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    entries = []
    for p, log in zip(cohort.participants, cohort.logs):
        path = out / "logs" / f"{p.id}.jsonl"
        write_event_log(log, path, p.tz_offset_minutes)
        entries.append(ManifestEntry(p, path))
    manifest = CohortManifest(tuple(entries), *cohort.window)
    write_manifest(manifest, out / "manifest.csv")
    rows = ground_truth(cohort.config, cohort)
    with open(out / "ground_truth.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    with open(out / "generator_config.json", "w") as fh:
        json.dump(cohort.config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out / "manifest.csv"
