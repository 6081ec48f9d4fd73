"""Daily sensing features and their study-period aggregation."""

from .aggregate import DailyRecord, FeatureVector, aggregate
from .extract import (
    FeatureConfig,
    ParticipantFeatures,
    extract_cohort,
    extract_for,
    extract_manifest,
    extract_participant,
    extraction_report,
)
from .names import N_FEATURES, category_feature_counts, category_of, feature_names

__all__ = [
    "DailyRecord", "FeatureVector", "aggregate", "FeatureConfig", "ParticipantFeatures",
    "extract_cohort", "extract_for", "extract_manifest", "extract_participant",
    "extraction_report", "N_FEATURES", "category_feature_counts", "category_of",
    "feature_names",
]
