"""Per-day features for the non-location categories.

Every function takes the events of one logical local day (04:00 to 04:00),
the day index and the participant's UTC offset, and returns a mapping from
daily base key (without the category prefix) to a value or ``None`` when the
feature cannot be computed.
"""

from __future__ import annotations

import numpy as np

from ..core import (
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
    PERIODS,
    PERIODS_AND_DAY,
    DAY_START_HOUR,
    day_start_ms,
    period_codes,
)

MIN_SPECTRAL_SAMPLES = 8


def _std(values):
    """Sample standard deviation; ``None`` for fewer than two values."""
    if len(values) < 2:
        return None
    return float(np.std(values, ddof=1))


def _mean(values):
    return float(np.mean(values)) if len(values) else None


def _median(values):
    return float(np.median(values)) if len(values) else None


def _times(events):
    return np.fromiter((e.timestamp_ms for e in events), dtype=np.int64, count=len(events))


def _period_masks(times, tz_offset_minutes):
    """Boolean masks for the four periods plus the entire day."""
    codes = period_codes(times, tz_offset_minutes)
    masks = {p: codes == i for i, p in enumerate(PERIODS)}
    masks[PERIODS_AND_DAY[-1]] = np.ones(len(times), dtype=bool)
    return masks


# Accelerometer ----------------------------------------------------------------

def burst_spectrum(samples, min_samples: int = MIN_SPECTRAL_SAMPLES):
    """Dominant frequency (Hz), its amplitude and mean squared magnitude of a burst.

    The magnitude series is detrended before the FFT and the DC bin is skipped.
    Amplitude is single-sided (2|X_k|/n), so a sinusoid of amplitude A reads A.
    Frequency and amplitude are ``None`` below ``min_samples`` samples.
    """
    arr = np.asarray(samples, dtype=float)
    mag = np.sqrt(arr[:, 1] ** 2 + arr[:, 2] ** 2 + arr[:, 3] ** 2)
    energy = float(np.mean(mag ** 2))
    n = mag.size
    if n < min_samples:
        return None, None, energy
    steps = np.diff(arr[:, 0])
    step_ms = float(np.median(steps)) if steps.size else 0.0
    if step_ms <= 0:
        return None, None, energy
    fs = 1000.0 / step_ms
    spectrum = np.abs(np.fft.rfft(mag - mag.mean()))
    k = int(np.argmax(spectrum[1:])) + 1
    return k * fs / n, 2.0 * spectrum[k] / n, energy


def accel_daily(events, day_index, tz_offset_minutes, min_samples=MIN_SPECTRAL_SAMPLES):
    out = {}
    freqs, amps = [], []
    energy_by_period = {p: [] for p in PERIODS}
    if events:
        codes = period_codes(_times(events), tz_offset_minutes)
        for e, code in zip(events, codes):
            f, a, energy = burst_spectrum(e.payload.samples, min_samples)
            if f is not None:
                freqs.append(f)
                amps.append(a)
            energy_by_period[PERIODS[code]].append(energy)
    out["freq_mean"] = _mean(freqs)
    out["freq_std"] = _std(freqs)
    out["amplitude_mean"] = _mean(amps)
    out["amplitude_std"] = _std(amps)
    for p in PERIODS:
        out[f"energy_mean.{p.value}"] = _mean(energy_by_period[p])
    for p in PERIODS:
        out[f"energy_std.{p.value}"] = _std(energy_by_period[p])
    return out


# Battery ------------------------------------------------------------------------

def battery_daily(events, day_index=None, tz_offset_minutes=0):
    levels = [e.payload.level for e in events]
    charges = 0
    for prev, cur in zip(events, events[1:]):
        if cur.payload.charging and not prev.payload.charging:
            charges += 1
    return {"level_mean": _mean(levels), "charges": float(charges)}


# Calls --------------------------------------------------------------------------

def calls_daily(events, day_index=None, tz_offset_minutes=0):
    counts = {d: 0 for d in ("incoming", "outgoing", "missed", "rejected")}
    durations = {"incoming": 0.0, "outgoing": 0.0}
    peers = {"incoming": set(), "outgoing": set(), "missed": set()}
    for e in events:
        p = e.payload
        counts[p.direction] += 1
        if p.direction in durations:
            durations[p.direction] += p.duration_s
        if p.direction in peers:
            peers[p.direction].add(p.correspondent)
    out = {f"{d}_count": float(n) for d, n in counts.items()}
    out.update({f"{d}_duration": v for d, v in durations.items()})
    out.update({f"{d}_correspondents": float(len(s)) for d, s in peers.items()})
    return out


# Unlocks ------------------------------------------------------------------------

_SESSION_END = frozenset({"lock", "screen_off"})


def unlocks_daily(events, day_index, tz_offset_minutes):
    """Unlock timing, session and count features.

    Minutes are counted from the local midnight of the owning date, so an
    unlock at 01:30 the following night reads 1530. A session runs from an
    unlock to the next lock/screen-off; an unlock with no closing event before
    the next unlock or the end of the logical day is closed there.
    """
    start = int(day_start_ms(day_index, tz_offset_minutes))
    end = start + MS_PER_DAY
    midnight = start - DAY_START_HOUR * MS_PER_HOUR

    unlock_times = np.array([e.timestamp_ms for e in events if e.payload.kind == "unlock"],
                            dtype=np.int64)
    out = {}
    if unlock_times.size:
        minutes = (unlock_times - midnight) / MS_PER_MINUTE
        codes = period_codes(unlock_times, tz_offset_minutes)
        for i, p in enumerate(PERIODS):
            sel = minutes[codes == i]
            out[f"first_unlock.{p.value}"] = float(sel[0]) if sel.size else None
        out["first_unlock.entire_day"] = float(minutes[0])
        out["last_unlock"] = float(minutes[-1])
    else:
        for p in PERIODS_AND_DAY:
            out[f"first_unlock.{p.value}"] = None
        out["last_unlock"] = None

    sessions = []
    open_at = None
    for e in events:
        kind = e.payload.kind
        if kind == "unlock":
            if open_at is not None:
                sessions.append(e.timestamp_ms - open_at)
            open_at = e.timestamp_ms
        elif kind in _SESSION_END and open_at is not None:
            sessions.append(e.timestamp_ms - open_at)
            open_at = None
    if open_at is not None:
        sessions.append(end - open_at)

    out["session_duration"] = _mean(np.asarray(sessions) / 1000.0) if sessions else None
    out["unlock_interval"] = (float(np.mean(np.diff(unlock_times))) / 1000.0
                              if unlock_times.size >= 2 else None)
    out["unlock_count"] = float(unlock_times.size)
    return out


# Light --------------------------------------------------------------------------

def light_daily(events, day_index=None, tz_offset_minutes=0):
    times = _times(events)
    lux = np.array([e.payload.lux for e in events], dtype=float)
    masks = _period_masks(times, tz_offset_minutes)
    return {f"median_lux.{p.value}": _median(lux[masks[p]]) for p in PERIODS_AND_DAY}


# Noise --------------------------------------------------------------------------

def noise_daily(events, day_index, tz_offset_minutes, participant_minmax,
                silence_threshold_db: float = 40.0):
    """Median absolute and min-max scaled noise plus silence ratio per period.

    ``participant_minmax`` is the (min, max) dB over the participant's whole
    study; when they coincide every scaled value is 0.
    """
    times = _times(events)
    db = np.array([e.payload.db for e in events], dtype=float)
    lo, hi = participant_minmax
    scaled = (db - lo) / (hi - lo) if hi > lo else np.zeros_like(db)
    masks = _period_masks(times, tz_offset_minutes)
    out = {}
    for p in PERIODS_AND_DAY:
        out[f"median_db.{p.value}"] = _median(db[masks[p]])
    for p in PERIODS_AND_DAY:
        out[f"median_scaled.{p.value}"] = _median(scaled[masks[p]])
    for p in PERIODS_AND_DAY:
        sel = db[masks[p]]
        out[f"silence_ratio.{p.value}"] = (float(np.mean(sel < silence_threshold_db))
                                           if sel.size else None)
    return out


# Pedometer ------------------------------------------------------------------------

def pedometer_daily(events, day_index=None, tz_offset_minutes=0):
    times = _times(events)
    steps = np.array([e.payload.steps for e in events], dtype=float)
    masks = _period_masks(times, tz_offset_minutes)
    return {f"steps.{p.value}": float(steps[masks[p]].sum()) for p in PERIODS_AND_DAY}
