"""Small constructors shared by tests."""

from __future__ import annotations

import datetime as dt

from mobipersona.core import (AgeRange, Country, Education, Employment, Gender, Participant,
                              SensorEvent)

UTC = dt.timezone.utc


def local_ms(year, month, day, hour=0, minute=0, second=0, tz_minutes=0) -> int:
    """UTC epoch ms of a local wall-clock time at a fixed offset."""
    tz = dt.timezone(dt.timedelta(minutes=tz_minutes))
    return int(dt.datetime(year, month, day, hour, minute, second, tzinfo=tz).timestamp() * 1000)


def participant(pid="p1", country=Country.UK, gender=Gender.FEMALE, age=AgeRange.A26_34,
                employment=Employment.EMPLOYED, responses=None, tz=0) -> Participant:
    return Participant(pid, country, gender, age, Education.BACHELOR, employment,
                       tuple(responses or [3] * 50), tz)


def ev(category, ts, payload) -> SensorEvent:
    return SensorEvent(category, int(ts), payload)


def cohort_matrix(seed=3, n_features=8, planted=None, strength=3.0, noise_seed=0):
    """Matrix over the reference demographics with labels and random features.

    ``planted`` maps a feature name to a Trait whose standardized score is
    added to that column with weight ``strength``.
    """
    import numpy as np

    from mobipersona.core import Trait
    from mobipersona.features.names import feature_names
    from mobipersona.matrix import CohortMatrix
    from mobipersona.pipeline import label_matrix
    from mobipersona.synth import GeneratorConfig, draw_population

    population = draw_population(GeneratorConfig(seed=seed))
    people = [p for p, _ in population]
    names = feature_names()[:: len(feature_names()) // n_features][:n_features]
    planted = planted or {}
    names = list(dict.fromkeys(list(planted) + names))[: max(n_features, len(planted))]
    rng = np.random.default_rng(noise_seed)
    values = rng.normal(size=(len(people), len(names)))
    for name, trait in planted.items():
        s = np.array([scores[Trait(trait)] for _, scores in population], dtype=float)
        values[:, names.index(name)] += strength * (s - s.mean()) / s.std()
    matrix = CohortMatrix(tuple(p.id for p in people), tuple(names), values,
                          participants=tuple(people))
    return label_matrix(matrix)
