"""Coverage analytics and report emission."""

from .analytics import (
    AgreementMatrix,
    CombinationResult,
    CoverageMatrix,
    DatasetStats,
    GapAnalysis,
    TechniqueGaps,
    agreement,
    analyze,
    best_combination,
    build_matrix,
    combination_coverage,
    dataset_overlap,
    dataset_stats,
    exhaustive_combination,
    greedy_combination,
    ranked_combinations,
    risk_coverage_correlation,
    technique_gaps,
)
from .emit import emit_report, load_report

__all__ = [
    "AgreementMatrix",
    "CombinationResult",
    "CoverageMatrix",
    "DatasetStats",
    "GapAnalysis",
    "TechniqueGaps",
    "agreement",
    "analyze",
    "best_combination",
    "build_matrix",
    "combination_coverage",
    "dataset_overlap",
    "dataset_stats",
    "emit_report",
    "exhaustive_combination",
    "greedy_combination",
    "load_report",
    "ranked_combinations",
    "risk_coverage_correlation",
    "technique_gaps",
]
