"""Per-pair coverage assessment: scoring, rule-based and remote assessors."""

from .remote import (
    ModelServiceConfig,
    RemoteAssessor,
    ResponseCache,
    assess_remote,
    parse_response,
    render_prompt,
    template_hash,
)
from .rules import DEFAULT_RULES, RULES_ASSESSOR_ID, RuleConfig, assess_rule_based, technique_classes
from .scoring import (
    CRITERIA,
    DEFAULT_THRESHOLDS,
    LABEL_ORDER,
    Answer,
    AssessmentRecord,
    CoverageLabel,
    CriteriaVector,
    LabelThresholds,
    label_from_score,
    make_record,
    reconcile,
    reconcile_all,
    score_criteria,
)

__all__ = [
    "CRITERIA",
    "DEFAULT_RULES",
    "DEFAULT_THRESHOLDS",
    "LABEL_ORDER",
    "RULES_ASSESSOR_ID",
    "Answer",
    "AssessmentRecord",
    "CoverageLabel",
    "CriteriaVector",
    "LabelThresholds",
    "ModelServiceConfig",
    "RemoteAssessor",
    "ResponseCache",
    "RuleConfig",
    "assess_remote",
    "assess_rule_based",
    "label_from_score",
    "make_record",
    "parse_response",
    "reconcile",
    "reconcile_all",
    "render_prompt",
    "score_criteria",
    "technique_classes",
    "template_hash",
]
