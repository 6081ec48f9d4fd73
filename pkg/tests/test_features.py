import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mobipersona.core import (MS_PER_MINUTE, AccelBurst, BatteryReading,
                              CallRecord, Category, DayType, LightReading, LocationFix,
                              NoiseReading, ScreenEvent, StepCount)
from mobipersona.errors import Insufficient, NoPlaces
from mobipersona.features.aggregate import DailyRecord, aggregate
from mobipersona.features.daily import (accel_daily, battery_daily, burst_spectrum, calls_daily,
                                        light_daily, noise_daily, pedometer_daily,
                                        unlocks_daily)
from mobipersona.features.extract import extract_participant
from mobipersona.features.location import (StayPoint, build_places, detect_stay_points,
                                           haversine, location_daily, place_entropy,
                                           radius_of_gyration, routine_index,
                                           travelled_distance)
from mobipersona.features.names import (N_FEATURES, category_feature_counts, daily_keys,
                                        feature_names)
from mobipersona.ingest import make_event_log

import oracles
from helpers import ev, local_ms

TUE = dt.date(2018, 3, 6)
DAY = (TUE - dt.date(1970, 1, 1)).days


def at(hour, minute=0, day=TUE, tz=0):
    """UTC ms of a local wall-clock time; hours >= 24 roll into the next date."""
    base = dt.datetime(day.year, day.month, day.day) + dt.timedelta(hours=hour, minutes=minute)
    return local_ms(base.year, base.month, base.day, base.hour, base.minute, tz_minutes=tz)


# Names ------------------------------------------------------------------------------

def test_feature_count_is_282():
    names = feature_names()
    assert len(names) == N_FEATURES == 282
    assert len(set(names)) == 282
    assert len(daily_keys()) == 70


def test_per_category_counts():
    counts = {c.value: n for c, n in category_feature_counts().items()}
    assert counts == {"accelerometer": 48, "battery": 8, "calls": 36, "unlocks": 36,
                      "light": 20, "location": 54, "noise": 60, "pedometer": 20}


# Accelerometer -----------------------------------------------------------------------

def _burst(values, step_ms=100.0):
    return AccelBurst(tuple((i * step_ms, 0.0, 0.0, float(v)) for i, v in enumerate(values)))


def test_constant_burst_has_zero_amplitude_and_squared_energy():
    f, a, energy = burst_spectrum(_burst([3.0] * 16).samples)
    assert a == pytest.approx(0.0, abs=1e-12)
    assert energy == pytest.approx(9.0)


def test_two_hertz_sinusoid_detected():
    t = np.arange(450) / 10.0
    f, a, _ = burst_spectrum(_burst(9.8 + 0.5 * np.sin(2 * math.pi * 2.0 * t)).samples)
    bin_width = 10.0 / 450
    assert abs(f - 2.0) <= bin_width
    assert a == pytest.approx(0.5, rel=0.05)


def test_short_burst_has_energy_only():
    f, a, energy = burst_spectrum(_burst([1, 2, 3]).samples)
    assert f is None and a is None and energy == pytest.approx(14 / 3)


def test_no_evening_bursts_leaves_evening_energy_absent():
    events = [ev(Category.ACCELEROMETER, at(h), _burst([1.0] * 10)) for h in (6, 7, 13)]
    out = accel_daily(events, DAY, 0)
    assert out["energy_mean.evening"] is None and out["energy_std.evening"] is None
    assert out["energy_mean.morning"] == pytest.approx(1.0)
    assert out["energy_std.morning"] == pytest.approx(0.0)
    assert out["energy_std.afternoon"] is None


# Battery, calls, unlocks, light, noise, pedometer -------------------------------------

def _battery(levels, charging):
    return [ev(Category.BATTERY, at(8 + i), BatteryReading(lv, ch))
            for i, (lv, ch) in enumerate(zip(levels, charging))]


def test_battery_mean_and_one_charge():
    out = battery_daily(_battery([50, 60, 70], [False, True, True]))
    assert out == {"level_mean": 60.0, "charges": 1.0}


def test_battery_charging_all_day_has_no_transition():
    assert battery_daily(_battery([50, 60, 70], [True] * 3))["charges"] == 0.0


def test_battery_alternating_flags():
    assert battery_daily(_battery([1, 2, 3, 4], [False, True, False, True]))["charges"] == 2.0


def test_two_outgoing_calls_to_one_peer():
    events = [ev(Category.CALLS, at(9), CallRecord("outgoing", 60.0, "h1")),
              ev(Category.CALLS, at(10), CallRecord("outgoing", 120.0, "h1"))]
    out = calls_daily(events)
    assert (out["outgoing_count"], out["outgoing_duration"], out["outgoing_correspondents"]) == \
        (2.0, 180.0, 1.0)


def test_missed_call_leaves_durations():
    out = calls_daily([ev(Category.CALLS, at(9), CallRecord("missed", 0.0, "h2"))])
    assert out["missed_count"] == 1.0 and out["missed_correspondents"] == 1.0
    assert out["incoming_duration"] == out["outgoing_duration"] == 0.0


def test_no_calls_gives_nine_zeros():
    out = calls_daily([])
    assert len(out) == 9 and set(out.values()) == {0.0}


def _screen(hour, minute, kind):
    return ev(Category.UNLOCKS, at(hour, minute), ScreenEvent(kind))


def test_single_unlock_session():
    out = unlocks_daily([_screen(9, 0, "unlock"), _screen(9, 5, "lock")], DAY, 0)
    assert out["unlock_count"] == 1.0
    assert out["session_duration"] == 300.0
    assert out["first_unlock.entire_day"] == 540.0
    assert out["first_unlock.morning"] == 540.0
    assert out["first_unlock.evening"] is None


def test_no_unlocks():
    out = unlocks_daily([], DAY, 0)
    assert out["unlock_count"] == 0.0
    assert all(v is None for k, v in out.items() if k != "unlock_count")


def test_unlock_interval_mean():
    out = unlocks_daily([_screen(8, 0, "unlock"), _screen(20, 0, "unlock")], DAY, 0)
    assert out["unlock_interval"] == 43200.0
    assert out["last_unlock"] == 1200.0


def test_unlock_after_midnight_counts_past_1440():
    out = unlocks_daily([_screen(25, 30, "unlock"), _screen(25, 40, "lock")], DAY, 0)
    assert out["first_unlock.night"] == 1530.0
    assert out["session_duration"] == 600.0


def test_unpaired_unlock_closed_at_logical_day_end():
    out = unlocks_daily([_screen(27, 0, "unlock")], DAY, 0)
    assert out["session_duration"] == 3600.0


def test_light_medians():
    events = [ev(Category.LIGHT, at(5, i), LightReading(v)) for i, v in enumerate([10, 20, 1000])]
    out = light_daily(events)
    assert out["median_lux.morning"] == 20.0
    assert out["median_lux.evening"] is None
    single = light_daily([ev(Category.LIGHT, at(13), LightReading(7.5))])
    assert single["median_lux.afternoon"] == single["median_lux.entire_day"] == 7.5


def test_noise_silence_and_scaling():
    quiet = [ev(Category.NOISE, at(9, i), NoiseReading(35.0)) for i in range(3)]
    assert noise_daily(quiet, DAY, 0, (30.0, 80.0))["silence_ratio.entire_day"] == 1.0
    one = noise_daily([ev(Category.NOISE, at(9), NoiseReading(55.0))], DAY, 0, (30.0, 80.0))
    assert one["median_scaled.morning"] == pytest.approx(0.5)
    night = [ev(Category.NOISE, at(23, i), NoiseReading(v)) for i, v in enumerate([30, 50, 70])]
    assert noise_daily(night, DAY, 0, (30.0, 70.0))["median_db.night"] == 50.0


def test_noise_flat_range_scales_to_zero():
    events = [ev(Category.NOISE, at(9), NoiseReading(50.0))]
    assert noise_daily(events, DAY, 0, (50.0, 50.0))["median_scaled.entire_day"] == 0.0


def test_pedometer_sums():
    events = [ev(Category.PEDOMETER, at(6), StepCount(100)),
              ev(Category.PEDOMETER, at(7), StepCount(200))]
    out = pedometer_daily(events)
    assert out["steps.morning"] == out["steps.entire_day"] == 300.0
    night = pedometer_daily([ev(Category.PEDOMETER, at(23), StepCount(50))])
    assert night["steps.night"] == 50.0
    assert night["steps.morning"] == night["steps.afternoon"] == night["steps.evening"] == 0.0


@given(st.lists(st.floats(20.0, 100.0), min_size=1, max_size=30))
def test_noise_ratios_bounded(dbs):
    events = [ev(Category.NOISE, at(4) + i * 30 * MS_PER_MINUTE, NoiseReading(d))
              for i, d in enumerate(dbs)]
    out = noise_daily(events, DAY, 0, (min(dbs), max(dbs)))
    for k, v in out.items():
        if v is not None and not k.startswith("median_db"):
            assert 0.0 <= v <= 1.0


# Location -----------------------------------------------------------------------------

def _fixes(start_ms, minutes, lat, lon, step_min=1):
    return [ev(Category.LOCATION, start_ms + m * MS_PER_MINUTE, LocationFix(la, lo, 5.0))
            for m, la, lo in zip(range(0, minutes + 1, step_min),
                                 np.broadcast_to(lat, minutes + 1)[::step_min],
                                 np.broadcast_to(lon, minutes + 1)[::step_min])]


def test_stationary_hour_is_one_stay_point():
    stays = detect_stay_points(_fixes(at(10), 60, 51.5, -0.1))
    assert len(stays) == 1 and stays[0].dwell_s == 3600.0


def test_straight_line_movement_has_no_stay_points():
    lat = 51.5 + np.linspace(0, 10_000 / 111_195, 31)
    assert detect_stay_points(_fixes(at(10), 30, lat, -0.1)) == []


def test_two_clusters_one_km_apart():
    dlat = 1000 / 111_195
    a = _fixes(at(10), 30, 51.5, -0.1)
    transit = _fixes(at(10, 31), 4, 51.5 + dlat * np.arange(1, 6) / 6, -0.1)
    b = _fixes(at(10, 36), 30, 51.5 + dlat, -0.1)
    stays = detect_stay_points(a + transit + b)
    assert len(stays) == 2
    assert haversine(stays[0].lat, stays[0].lon, stays[1].lat, stays[1].lon) == \
        pytest.approx(1000, abs=50)


def test_build_places_requires_stay_points():
    with pytest.raises(NoPlaces):
        build_places([])


def _stay(lat, start, end):
    return StayPoint(lat, 0.0, start, end, 10)


def test_single_cluster_is_home_without_work():
    places = build_places([_stay(10.0, at(10), at(12))])
    assert [p.label for p in places] == ["home"]


def test_home_and_work_assignment():
    a, b = 10.0, 10.05
    stays = [_stay(a, at(22), at(30)), _stay(b, at(31), at(37)), _stay(a, at(46), at(52))]
    places = build_places(stays)
    labels = {round(p.lat, 2): p.label for p in places}
    assert labels == {10.0: "home", 10.05: "work"}


def test_home_is_longest_night_place():
    a, b = 10.0, 10.05
    stays = [_stay(a, at(22), at(32)), _stay(b, at(46), at(48))]
    home = next(p for p in build_places(stays) if p.label == "home")
    assert home.lat == pytest.approx(a)


def test_whole_day_at_one_place():
    fixes = _fixes(at(4), 24 * 60 - 1, 51.5, -0.1, step_min=15)
    stays = detect_stay_points(fixes)
    places = build_places(stays)
    out = location_daily(fixes, places, stays, DAY, 0)
    assert out["entropy"] == 0.0 and out["distance"] == 0.0
    assert out["gyration_radius"] == pytest.approx(0.0, abs=1e-6)
    assert out["places_count"] == 1.0 and out["work_time"] == 0.0


def test_day_without_fixes_is_absent():
    assert set(location_daily([], [], [], DAY, 0).values()) == {None}


def test_entropy_values():
    assert place_entropy([5, 5]) == pytest.approx(math.log(2))
    assert place_entropy([0.5, 0.25, 0.25]) == pytest.approx(1.0397, abs=1e-4)
    assert place_entropy([0.5, 0.25, 0.25]) == pytest.approx(oracles.entropy_nats([2, 1, 1]))
    assert place_entropy([3]) == 0.0


@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=12))
def test_entropy_bounds(shares):
    h = place_entropy(shares)
    assert -1e-12 <= h <= math.log(len(shares)) + 1e-9
    assert h == pytest.approx(oracles.entropy_nats(shares), abs=1e-9)


coords = st.lists(st.tuples(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05)), min_size=1,
                  max_size=20)


@given(coords, st.floats(-60, 60), st.floats(-170, 170))
def test_gyration_matches_oracle_and_is_translation_invariant(pts, lat0, lon0):
    lat = [lat0 + a for a, _ in pts]
    lon = [lon0 + b for _, b in pts]
    rg = radius_of_gyration(lat, lon)
    assert rg >= 0
    assert rg == pytest.approx(oracles.gyration_planar(lat, lon), rel=1e-9, abs=1e-6)
    shifted = radius_of_gyration(lat, [x + 3.0 for x in lon])
    assert shifted == pytest.approx(rg, rel=1e-9, abs=1e-6)


def test_gyration_zero_iff_coincident():
    assert radius_of_gyration([1.0, 1.0], [2.0, 2.0]) == 0.0
    assert radius_of_gyration([1.0, 1.001], [2.0, 2.0]) > 0.0


@given(st.floats(-80, 80), st.floats(-179, 179), st.floats(-80, 80), st.floats(-179, 179))
def test_haversine_agrees_with_law_of_cosines(a, b, c, d):
    got = float(haversine(a, b, c, d))
    assert got == pytest.approx(oracles.great_circle_m(a, b, c, d), abs=1.0)


def test_distance_skips_implausible_legs():
    t = np.array([0, 60_000, 120_000])
    lat = np.array([0.0, 0.01, 5.0])
    assert travelled_distance(t, lat, np.zeros(3)) == pytest.approx(
        float(haversine(0, 0, 0.01, 0)))


def test_routine_index_examples():
    assert routine_index([{1, 2}, {1, 2}, {1, 2}]) == 1.0
    assert routine_index([{1}, {2}, {3}]) == 0.0
    assert routine_index([{"A", "B"}, {"A"}, {"B"}]) == pytest.approx(1 / 3)
    with pytest.raises(Insufficient):
        routine_index([{1}])


@given(st.lists(st.frozensets(st.integers(0, 5)), min_size=2, max_size=8), st.randoms())
def test_routine_index_bounded_and_order_free(sets, rnd):
    r = routine_index(sets)
    assert 0.0 <= r <= 1.0
    assert r == pytest.approx(oracles.jaccard_mean(sets))
    shuffled = list(sets)
    rnd.shuffle(shuffled)
    assert routine_index(shuffled) == pytest.approx(r)


# Aggregation and extraction ------------------------------------------------------------

def _record(day, value, key="battery.level_mean", daytype=DayType.WEEKDAY):
    values = dict.fromkeys(daily_keys())
    values[key] = value
    return DailyRecord("p", day, daytype, values)


def test_aggregate_mean_and_std():
    fv = aggregate([_record(1, 2.0), _record(2, 4.0), _record(3, None)]).values
    assert fv["battery.level_mean.mean.weekday"] == 3.0
    assert fv["battery.level_mean.std.weekday"] == pytest.approx(math.sqrt(2))
    assert fv["battery.level_mean.mean.weekend"] is None


def test_aggregate_single_day_has_no_std():
    fv = aggregate([_record(1, 5.0)]).values
    assert fv["battery.level_mean.mean.weekday"] == 5.0
    assert fv["battery.level_mean.std.weekday"] is None


@given(st.lists(st.one_of(st.none(), st.floats(-1e3, 1e3)), min_size=1, max_size=10),
       st.randoms())
def test_aggregate_order_free_and_ignores_empty_days(values, rnd):
    recs = [_record(i, v) for i, v in enumerate(values)]
    base = aggregate(recs).values
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    again = aggregate(shuffled + [_record(99, None)]).values
    key = "battery.level_mean"
    xs = [v for v in values if v is not None]
    for stat in ("mean", "std"):
        a, b = base[f"{key}.{stat}.weekday"], again[f"{key}.{stat}.weekday"]
        assert (a is None) == (b is None)
        if a is not None:
            assert a == pytest.approx(b, abs=1e-9)
    if len(xs) >= 2:
        assert base[f"{key}.std.weekday"] == pytest.approx(oracles.sample_std(xs), abs=1e-6)


def test_extract_count_features_zero_when_stream_present():
    day2 = TUE + dt.timedelta(days=1)
    events = [ev(Category.CALLS, at(10), CallRecord("incoming", 30.0, "x")),
              ev(Category.NOISE, at(10, day=day2), NoiseReading(50.0))]
    pf = extract_participant("p", make_event_log("p", events))
    fv = pf.vector.values
    assert fv["calls.incoming_count.mean.weekday"] == 0.5
    assert fv["pedometer.steps.entire_day.mean.weekday"] is None
    assert fv["battery.level_mean.mean.weekday"] is None
    assert len(pf.daily) == 2


def test_feature_names_do_not_depend_on_data():
    a = extract_participant("p", make_event_log("p", [])).vector
    b = extract_participant("p", make_event_log(
        "p", [ev(Category.LIGHT, at(9), LightReading(1.0))])).vector
    assert list(a.values) == list(b.values) == feature_names()
    assert a.missing_fraction == 1.0
