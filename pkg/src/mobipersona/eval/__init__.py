"""Evaluation protocols, metrics and report tables."""

from .importance import ImportanceRow, feature_distributions, importance_by_category
from .metrics import McNemarResult, accuracy, cohen_kappa, mcnemar, mcnemar_from_counts
from .protocols import (
    METHOD1,
    METHOD2,
    POPULATIONS,
    EvalRun,
    ModelSettings,
    balanced_filter,
    evaluate_balanced,
    method1_loco,
    method2_loso,
    population_filter,
)

__all__ = [
    "ImportanceRow", "feature_distributions", "importance_by_category", "McNemarResult",
    "accuracy", "cohen_kappa", "mcnemar", "mcnemar_from_counts", "METHOD1", "METHOD2",
    "POPULATIONS", "EvalRun", "ModelSettings", "balanced_filter", "evaluate_balanced",
    "method1_loco", "method2_loso", "population_filter",
]
