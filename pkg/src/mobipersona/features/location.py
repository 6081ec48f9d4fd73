"""Trajectory mining: stay points, places, daily mobility features, routine index."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import (
    MS_PER_DAY,
    MS_PER_HOUR,
    PERIOD_BOUNDS,
    PERIODS_AND_DAY,
    DayPeriod,
    day_date,
    day_start_ms,
)
from ..errors import Insufficient, NoPlaces

EARTH_RADIUS_M = 6_371_000.0


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in metres (broadcasts over arrays)."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    a = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


@dataclass(frozen=True)
class StayPoint:
    lat: float
    lon: float
    arrival_ms: int
    departure_ms: int
    n_fixes: int

    @property
    def dwell_s(self) -> float:
        return (self.departure_ms - self.arrival_ms) / 1000.0


@dataclass(frozen=True)
class Place:
    id: int
    lat: float
    lon: float
    visits: tuple[tuple[int, int], ...]
    dwell_s: float
    label: str = "other"  # home | work | other


def _fix_arrays(fixes):
    """Accept LocationFix events or an (n, 3) array of (t_ms, lat, lon)."""
    if isinstance(fixes, np.ndarray):
        return fixes[:, 0].astype(np.int64), fixes[:, 1].astype(float), fixes[:, 2].astype(float)
    t = np.array([e.timestamp_ms for e in fixes], dtype=np.int64)
    lat = np.array([e.payload.lat for e in fixes], dtype=float)
    lon = np.array([e.payload.lon for e in fixes], dtype=float)
    return t, lat, lon


@njit(cache=True)
def _stay_runs(t, lat, lon, roam_radius_m, min_dwell_ms):
    """Start and end (exclusive) indices of the stay-point runs."""
    n = t.shape[0]
    starts = np.empty(n, np.int64)
    ends = np.empty(n, np.int64)
    k = 0
    i = 0
    while i < n:
        j = i + 1
        slat = lat[i]
        slon = lon[i]
        while j < n:
            slat += lat[j]
            slon += lon[j]
            m = j - i + 1
            clat = math.radians(slat / m)
            clon = math.radians(slon / m)
            inside = True
            for q in range(i, j + 1):
                p_lat = math.radians(lat[q])
                a = (math.sin((clat - p_lat) / 2) ** 2 + math.cos(p_lat) * math.cos(clat)
                     * math.sin((clon - math.radians(lon[q])) / 2) ** 2)
                a = min(max(a, 0.0), 1.0)
                if 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a)) > roam_radius_m:
                    inside = False
                    break
            if not inside:
                break
            j += 1
        if t[j - 1] - t[i] >= min_dwell_ms:
            starts[k] = i
            ends[k] = j
            k += 1
            i = j
        else:
            i += 1
    return starts[:k], ends[:k]


def detect_stay_points(fixes, roam_radius_m: float = 200.0,
                       min_dwell_s: float = 1200.0) -> list[StayPoint]:
    """Maximal runs of consecutive fixes that all lie within ``roam_radius_m`` of
    the run centroid and span at least ``min_dwell_s``."""
    t, lat, lon = _fix_arrays(fixes)
    if t.size == 0:
        return []
    starts, ends = _stay_runs(t, lat, lon, float(roam_radius_m), float(min_dwell_s) * 1000.0)
    return [StayPoint(float(lat[i:j].mean()), float(lon[i:j].mean()), int(t[i]), int(t[j - 1]),
                      int(j - i)) for i, j in zip(starts, ends)]


def window_overlap_ms(start_ms, end_ms, tz_offset_minutes, hour_from, hour_to,
                      weekdays_only=False):
    """Overlap of [start, end) with a daily local window [hour_from, hour_to).

    Hours are measured from local midnight and may exceed 24 for windows that
    wrap past midnight (night = 22..28). With ``weekdays_only`` only windows
    starting on Monday-Friday count.
    """
    tz_ms = tz_offset_minutes * 60_000
    first = (start_ms + tz_ms) // MS_PER_DAY - 2
    last = (end_ms + tz_ms) // MS_PER_DAY + 1
    total = 0
    for day in range(int(first), int(last) + 1):
        if weekdays_only and day_date(day).weekday() >= 5:
            continue
        w0 = day * MS_PER_DAY + hour_from * MS_PER_HOUR - tz_ms
        w1 = day * MS_PER_DAY + hour_to * MS_PER_HOUR - tz_ms
        total += max(0, min(end_ms, w1) - max(start_ms, w0))
    return total


def build_places(staypoints, tz_offset_minutes: int = 0, merge_radius_m: float = 200.0,
                 work_hours: tuple[int, int] = (9, 17)) -> list[Place]:
    """Merge stay points into places and label home and work.

    Stay points join the nearest existing place whose dwell-weighted centroid
    lies within ``merge_radius_m``. Home has the most night-time dwell (most
    total dwell if nobody stays at night); work has the most weekday dwell in
    ``work_hours`` among the remaining places, if any.
    """
    if not staypoints:
        raise NoPlaces("no stay points to build places from")
    centroids = []  # [lat, lon, weight]
    members: list[list[StayPoint]] = []
    for sp in sorted(staypoints, key=lambda s: s.arrival_ms):
        w = max(sp.dwell_s, 1.0)
        best = None
        if centroids:
            c = np.array(centroids)
            dist = haversine(c[:, 0], c[:, 1], sp.lat, sp.lon)
            k = int(np.argmin(dist))
            if dist[k] <= merge_radius_m:
                best = k
        if best is None:
            centroids.append([sp.lat, sp.lon, w])
            members.append([sp])
        else:
            lat, lon, cw = centroids[best]
            centroids[best] = [(lat * cw + sp.lat * w) / (cw + w),
                               (lon * cw + sp.lon * w) / (cw + w), cw + w]
            members[best].append(sp)

    night = PERIOD_BOUNDS[DayPeriod.NIGHT]
    night_from, night_to = night[0] + 4, night[1] + 4
    night_dwell, work_dwell, total = [], [], []
    for group in members:
        night_dwell.append(sum(window_overlap_ms(s.arrival_ms, s.departure_ms, tz_offset_minutes,
                                                 night_from, night_to) for s in group))
        work_dwell.append(sum(window_overlap_ms(s.arrival_ms, s.departure_ms, tz_offset_minutes,
                                                work_hours[0], work_hours[1], weekdays_only=True)
                              for s in group))
        total.append(sum(s.departure_ms - s.arrival_ms for s in group))

    home = int(np.argmax(night_dwell)) if max(night_dwell) > 0 else int(np.argmax(total))
    work = None
    candidates = [(work_dwell[k], -k) for k in range(len(members)) if k != home and work_dwell[k] > 0]
    if candidates:
        work = -max(candidates)[1]

    places = []
    for k, (group, (lat, lon, _)) in enumerate(zip(members, centroids)):
        label = "home" if k == home else "work" if k == work else "other"
        places.append(Place(k, float(lat), float(lon),
                            tuple((s.arrival_ms, s.departure_ms) for s in group),
                            total[k] / 1000.0, label))
    return places


def place_entropy(dwell_shares) -> float:
    """Shannon entropy (nats) of dwell shares; zero shares are ignored."""
    p = np.asarray(dwell_shares, dtype=float)
    p = p[p > 0]
    if p.size == 0:
        return 0.0
    p = p / p.sum()
    return float(-(p * np.log(p)).sum())


def radius_of_gyration(lat, lon) -> float:
    """RMS distance (m) of fixes from their centroid on a local planar projection."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    lat0 = lat.mean()
    lon0 = lon.mean()
    x = EARTH_RADIUS_M * np.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_M * np.radians(lat - lat0)
    return float(np.sqrt(np.mean(x ** 2 + y ** 2)))


def travelled_distance(t_ms, lat, lon, max_speed_kmh: float = 300.0) -> float:
    """Sum of consecutive-fix distances, skipping legs faster than ``max_speed_kmh``."""
    if len(t_ms) < 2:
        return 0.0
    legs = haversine(lat[:-1], lon[:-1], lat[1:], lon[1:])
    dt_s = np.diff(np.asarray(t_ms, dtype=np.int64)) / 1000.0
    cap = max_speed_kmh / 3.6
    ok = (legs == 0) | ((dt_s > 0) & (legs <= cap * np.maximum(dt_s, 1e-9)))
    return float(legs[ok].sum())


def _clip(interval, lo, hi):
    return max(0, min(interval[1], hi) - max(interval[0], lo))


def location_daily(fixes, places, staypoints, day_index, tz_offset_minutes,
                   max_speed_kmh: float = 300.0):
    """Thirteen daily mobility features for one logical day.

    ``fixes`` are the day's fixes; ``places`` and ``staypoints`` cover the whole
    study. Returns all-``None`` when the day has no fixes.
    """
    keys = (["entropy", "places_count", "places_dwell", "stop_count", "gyration_radius"]
            + [f"home_time.{p.value}" for p in PERIODS_AND_DAY]
            + ["work_time", "distance", "travel_duration"])
    t, lat, lon = _fix_arrays(fixes)
    if t.size == 0:
        return dict.fromkeys(keys)

    d0 = int(day_start_ms(day_index, tz_offset_minutes))
    d1 = d0 + MS_PER_DAY
    dwell = np.array([sum(_clip(v, d0, d1) for v in pl.visits) for pl in places], dtype=float)
    out = {
        "entropy": place_entropy(dwell),
        "places_count": float(np.count_nonzero(dwell)),
        "places_dwell": float(dwell.sum()) / 1000.0,
        "stop_count": float(sum(1 for s in staypoints
                                if s.arrival_ms < d1 and s.departure_ms >= d0)),
        "gyration_radius": radius_of_gyration(lat, lon),
    }
    home = next((pl for pl in places if pl.label == "home"), None)
    work = next((pl for pl in places if pl.label == "work"), None)
    for p in PERIODS_AND_DAY:
        h0, h1 = PERIOD_BOUNDS[p]
        w0, w1 = d0 + h0 * MS_PER_HOUR, d0 + h1 * MS_PER_HOUR
        out[f"home_time.{p.value}"] = (sum(_clip(v, w0, w1) for v in home.visits) / 1000.0
                                       if home else 0.0)
    out["work_time"] = sum(_clip(v, d0, d1) for v in work.visits) / 1000.0 if work else 0.0
    out["distance"] = travelled_distance(t, lat, lon, max_speed_kmh)

    span = (int(t[0]), int(t[-1]))
    stay_in_span = sum(_clip((s.arrival_ms, s.departure_ms), *span) for s in staypoints)
    out["travel_duration"] = max(0, (span[1] - span[0]) - stay_in_span) / 1000.0
    return out


def visited_places(places, day_index, tz_offset_minutes) -> frozenset[int]:
    d0 = int(day_start_ms(day_index, tz_offset_minutes))
    d1 = d0 + MS_PER_DAY
    return frozenset(pl.id for pl in places if any(_clip(v, d0, d1) > 0 for v in pl.visits))


def routine_index(daily_place_sets) -> float:
    """Mean pairwise Jaccard similarity of the visited-place sets of each day.

    Two days that both visited no place count as identical.
    """
    sets = [frozenset(s) for s in daily_place_sets]
    if len(sets) < 2:
        raise Insufficient(f"routine index needs >= 2 days, got {len(sets)}")
    sims = []
    for a, b in itertools.combinations(sets, 2):
        union = a | b
        sims.append(len(a & b) / len(union) if union else 1.0)
    return float(np.mean(sims))
