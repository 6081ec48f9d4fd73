"""Participant-by-feature value grid shared by extraction, imputation and evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .core import COUNTRY_FLAG_PREFIX, Country, Participant, Trait
from .errors import ParseError, SchemaMismatch

FLAG_NAMES = [f"{COUNTRY_FLAG_PREFIX}{c.value}" for c in Country]


@dataclass(frozen=True)
class CohortMatrix:
    """Rows are participants, columns features; NaN marks a missing cell.

    ``participants`` optionally carries demographics aligned with the rows and
    ``labels`` maps a Trait to an int8 LOW/HIGH array aligned with the rows.
    """

    participant_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray
    participants: tuple[Participant, ...] | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "participant_ids", tuple(self.participant_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if values.shape != (len(self.participant_ids), len(self.feature_names)):
            raise SchemaMismatch(
                f"grid shape {values.shape} vs {len(self.participant_ids)} ids x "
                f"{len(self.feature_names)} names")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaMismatch("duplicate feature names")
        if self.participants is not None:
            ids = tuple(p.id for p in self.participants)
            if ids != self.participant_ids:
                raise SchemaMismatch("participant records not aligned with rows")
        for trait, lab in self.labels.items():
            if len(lab) != len(self.participant_ids):
                raise SchemaMismatch(f"labels for {trait} not aligned with rows")

    @property
    def mask(self) -> np.ndarray:
        """True where a cell is missing."""
        return np.isnan(self.values)

    @property
    def n_participants(self) -> int:
        return len(self.participant_ids)

    def missing_fraction(self) -> np.ndarray:
        return self.mask.mean(axis=1) if self.feature_names else np.zeros(self.n_participants)

    def take(self, rows) -> "CohortMatrix":
        rows = np.asarray(rows, dtype=int)
        return replace(
            self,
            participant_ids=tuple(self.participant_ids[i] for i in rows),
            values=self.values[rows],
            participants=(None if self.participants is None
                          else tuple(self.participants[i] for i in rows)),
            labels={t: np.asarray(v)[rows] for t, v in self.labels.items()},
        )

    def select_features(self, names) -> "CohortMatrix":
        index = {n: i for i, n in enumerate(self.feature_names)}
        cols = [index[n] for n in names]
        return replace(self, feature_names=tuple(names), values=self.values[:, cols])

    def with_labels(self, labels: dict) -> "CohortMatrix":
        return replace(self, labels={Trait(t): np.asarray(v, dtype=np.int8)
                                     for t, v in labels.items()})

    def with_country_flags(self, countries=None) -> "CohortMatrix":
        """Append one binary column per country.

        ``countries`` overrides the per-row country (used when rows are
        re-partitioned into pseudo-countries); by default it comes from the
        participant records.
        """
        if countries is None:
            if self.participants is None:
                raise SchemaMismatch("country flags need participant records")
            countries = [p.country for p in self.participants]
        countries = [Country(c) for c in countries]
        flags = np.array([[1.0 if c is k else 0.0 for k in Country] for c in countries])
        flags = flags.reshape(len(countries), len(Country))
        return replace(self, feature_names=self.feature_names + tuple(FLAG_NAMES),
                       values=np.hstack([self.values, flags]))


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_matrix(matrix: CohortMatrix, path) -> None:
    """Header ``participant_id,<features>``; missing cells are empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["participant_id", *matrix.feature_names])
        for pid, row in zip(matrix.participant_ids, matrix.values):
            w.writerow([pid, *(_fmt(v) for v in row)])


def read_matrix(path) -> CohortMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["participant_id"]:
        raise ParseError(f"{path}: missing participant_id header", line=1)
    names = rows[0][1:]
    ids, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(names) + 1:
            raise ParseError(f"{path}: expected {len(names) + 1} cells, got {len(row)}",
                             line=lineno)
        ids.append(row[0])
        try:
            values.append([float(c) if c != "" else np.nan for c in row[1:]])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", line=lineno) from exc
    grid = np.array(values, dtype=float).reshape(len(ids), len(names))
    return CohortMatrix(tuple(ids), tuple(names), grid)
