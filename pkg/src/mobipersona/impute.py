"""Participant missingness filter and round-robin ridge imputation."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .errors import AllMissingColumn, EmptyCohort, InvalidParam
from .matrix import CohortMatrix

log = logging.getLogger(__name__)

RIDGE_LAMBDA = 1e-3


@dataclass(frozen=True)
class FilterReport:
    threshold: float
    kept: tuple[str, ...]
    dropped: tuple[str, ...]
    retention_by_country: dict  # country code -> (kept, total)


def filter_missingness(matrix: CohortMatrix, threshold: float = 0.30
                       ) -> tuple[CohortMatrix, FilterReport]:
    """Drop participants whose missing fraction strictly exceeds ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise InvalidParam(f"threshold must lie in (0, 1), got {threshold}")
    frac = matrix.missing_fraction()
    keep = np.flatnonzero(frac <= threshold)
    if keep.size == 0:
        raise EmptyCohort(f"no participant has missing fraction <= {threshold}")
    kept_ids = tuple(matrix.participant_ids[i] for i in keep)
    dropped = tuple(pid for pid in matrix.participant_ids if pid not in set(kept_ids))
    retention = {}
    if matrix.participants is not None:
        total = Counter(p.country.value for p in matrix.participants)
        kept = Counter(matrix.participants[i].country.value for i in keep)
        retention = {c: (kept.get(c, 0), n) for c, n in total.items()}
    return matrix.take(keep), FilterReport(threshold, kept_ids, dropped, retention)


@dataclass(frozen=True)
class ImputeReport:
    missing_counts: dict  # feature name -> missing cells before imputation
    sweeps: int
    max_changes: tuple[float, ...]  # largest cell change / column std, per sweep
    converged: bool

    @property
    def final_max_change(self) -> float:
        return self.max_changes[-1] if self.max_changes else 0.0


def _ridge_predict(X_obs, y_obs, X_new, lam):
    """Ridge fit on standardized predictors with an unpenalized intercept."""
    mu = X_obs.mean(axis=0)
    sd = X_obs.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X_obs - mu) / sd
    Zn = (X_new - mu) / sd
    y_mu = y_obs.mean()
    yc = y_obs - y_mu
    n, d = Z.shape
    if n < d:
        alpha = np.linalg.solve(Z @ Z.T + lam * np.eye(n), yc)
        return y_mu + Zn @ (Z.T @ alpha)
    beta = np.linalg.solve(Z.T @ Z + lam * np.eye(d), Z.T @ yc)
    return y_mu + Zn @ beta


def iterative_impute(matrix: CohortMatrix, max_sweeps: int = 10, tol: float = 1e-3,
                     ridge: float = RIDGE_LAMBDA, clip: bool = False
                     ) -> tuple[CohortMatrix, ImputeReport]:
    """Fill missing cells by regressing each incomplete column on all the others.

    Missing cells start at the column median. Each sweep visits the incomplete
    columns in matrix order and overwrites their missing cells with a ridge
    prediction fitted on the rows where the column is observed. Iteration stops
    once the largest change of a sweep, relative to the column's observed std,
    drops below ``tol``. ``clip`` bounds predictions to the observed range.
    """
    if max_sweeps < 1:
        raise InvalidParam("max_sweeps must be >= 1")
    X = matrix.values.copy()
    miss = np.isnan(X)
    counts = {name: int(miss[:, j].sum()) for j, name in enumerate(matrix.feature_names)}
    if not miss.any():
        return matrix, ImputeReport(counts, 0, (), True)
    if X.shape[0] < 2:
        raise InvalidParam("imputation needs at least 2 participants")
    empty = [name for j, name in enumerate(matrix.feature_names) if miss[:, j].all()]
    if empty:
        raise AllMissingColumn(f"no observed values in column(s): {', '.join(empty[:5])}")

    incomplete = np.flatnonzero(miss.any(axis=0))
    med = np.nanmedian(X[:, incomplete], axis=0)
    lo = np.nanmin(X[:, incomplete], axis=0)
    hi = np.nanmax(X[:, incomplete], axis=0)
    scale = np.nanstd(X[:, incomplete], axis=0)
    scale[scale == 0] = 1.0
    for k, j in enumerate(incomplete):
        X[miss[:, j], j] = med[k]

    changes = []
    converged = False
    for _ in range(max_sweeps):
        worst = 0.0
        for k, j in enumerate(incomplete):
            rows = miss[:, j]
            others = np.delete(X, j, axis=1)
            pred = _ridge_predict(others[~rows], X[~rows, j], others[rows], ridge)
            if clip:
                pred = np.clip(pred, lo[k], hi[k])
            worst = max(worst, float(np.max(np.abs(pred - X[rows, j])) / scale[k]))
            X[rows, j] = pred
        changes.append(worst)
        if worst < tol:
            converged = True
            break
    if not converged:
        log.info("imputation stopped at sweep cap %d (max change %.3g)", max_sweeps, changes[-1])
    return replace(matrix, values=X), ImputeReport(counts, len(changes), tuple(changes), converged)


def drop_all_missing_columns(matrix: CohortMatrix) -> tuple[CohortMatrix, list[str]]:
    """Remove columns with no observed value; returns the names removed."""
    all_missing = matrix.mask.all(axis=0) if matrix.n_participants else np.zeros(0, bool)
    dropped = [n for n, m in zip(matrix.feature_names, all_missing) if m]
    kept = [n for n, m in zip(matrix.feature_names, all_missing) if not m]
    return matrix.select_features(kept), dropped


__all__ = ["CohortMatrix", "FilterReport", "ImputeReport", "filter_missingness",
           "iterative_impute", "drop_all_missing_columns"]
