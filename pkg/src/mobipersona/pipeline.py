"""Stage glue shared by the command line and the acceptance harness:
labels from questionnaires, then filtering and imputation of a feature matrix."""

from __future__ import annotations

from dataclasses import dataclass

from .core import Trait, trait_class_labels
from .errors import InvalidParam
from .impute import (FilterReport, ImputeReport, drop_all_missing_columns, filter_missingness,
                     iterative_impute)
from .matrix import CohortMatrix
from .psychometrics import ScoringKey, score_traits


def label_matrix(matrix: CohortMatrix, key: ScoringKey | None = None) -> CohortMatrix:
    """Attach LOW/HIGH labels per trait, split at the median of the matrix's own rows."""
    if matrix.participants is None:
        raise InvalidParam("labelling needs participant records")
    scores = [score_traits(p.responses, key) for p in matrix.participants]
    return matrix.with_labels({t: trait_class_labels(scores, t).labels for t in Trait})


@dataclass(frozen=True)
class PrepareReport:
    filter: FilterReport
    dropped_columns: tuple[str, ...]
    impute: ImputeReport


def prepare(matrix: CohortMatrix, threshold: float = 0.30, max_sweeps: int = 10,
            tol: float = 1e-3, clip: bool = True) -> tuple[CohortMatrix, PrepareReport]:
    """Drop sparse participants, then columns nobody observed, then impute the rest."""
    kept, freport = filter_missingness(matrix, threshold)
    kept, dropped = drop_all_missing_columns(kept)
    filled, ireport = iterative_impute(kept, max_sweeps=max_sweeps, tol=tol, clip=clip)
    return filled, PrepareReport(freport, tuple(dropped), ireport)
