"""Five-criterion answers, composite score, four-valued labels, reconciliation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import reduce
from typing import Any, Iterable, Iterator

from ..errors import InvalidScore

CRITERIA = (
    "attack_type_present",
    "protocol_recorded",
    "domain_match",
    "feature_sufficiency",
    "example_adequacy",
)

POINTS_PER_YES = 0.2
_EPS = 1e-9


class Answer(str, Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class CriteriaVector:
    attack_type_present: Answer = Answer.UNKNOWN
    protocol_recorded: Answer = Answer.UNKNOWN
    domain_match: Answer = Answer.UNKNOWN
    feature_sufficiency: Answer = Answer.UNKNOWN
    example_adequacy: Answer = Answer.UNKNOWN

    def __post_init__(self):
        for f in fields(self):
            if not isinstance(getattr(self, f.name), Answer):
                object.__setattr__(self, f.name, Answer(getattr(self, f.name)))

    def __iter__(self) -> Iterator[Answer]:
        return (getattr(self, name) for name in CRITERIA)

    @classmethod
    def of(cls, answers: Iterable[Answer | str]) -> "CriteriaVector":
        answers = list(answers)
        if len(answers) != len(CRITERIA):
            raise ValueError(f"expected {len(CRITERIA)} answers, got {len(answers)}")
        return cls(*(Answer(a) for a in answers))

    @property
    def yes_count(self) -> int:
        return sum(a is Answer.YES for a in self)

    @property
    def unknown_count(self) -> int:
        return sum(a is Answer.UNKNOWN for a in self)

    def to_dict(self) -> dict[str, str]:
        return {name: getattr(self, name).value for name in CRITERIA}

    @classmethod
    def from_dict(cls, d: dict[str, str]) -> "CriteriaVector":
        return cls.of(d[name] for name in CRITERIA)


class CoverageLabel(Enum):
    """Ordered No < Unknown < Partial < Full by numeric value."""

    FULL = "Full"
    PARTIAL = "Partial"
    NO = "No"
    UNKNOWN = "Unknown"

    @property
    def numeric_value(self) -> float:
        return _NUMERIC[self]

    def __lt__(self, other):
        if not isinstance(other, CoverageLabel):
            return NotImplemented
        return self.numeric_value < other.numeric_value

    def __le__(self, other):
        if not isinstance(other, CoverageLabel):
            return NotImplemented
        return self.numeric_value <= other.numeric_value

    def __gt__(self, other):
        if not isinstance(other, CoverageLabel):
            return NotImplemented
        return self.numeric_value > other.numeric_value

    def __ge__(self, other):
        if not isinstance(other, CoverageLabel):
            return NotImplemented
        return self.numeric_value >= other.numeric_value


_NUMERIC = {
    CoverageLabel.FULL: 1.0,
    CoverageLabel.PARTIAL: 0.5,
    CoverageLabel.NO: 0.0,
    CoverageLabel.UNKNOWN: 0.25,
}

LABEL_ORDER = (CoverageLabel.NO, CoverageLabel.UNKNOWN, CoverageLabel.PARTIAL, CoverageLabel.FULL)


def score_criteria(criteria: CriteriaVector) -> float:
    # count / 5 is the nearest double to 0.2 * count; 0.2 * 3 is not
    return criteria.yes_count / 5


@dataclass(frozen=True)
class LabelThresholds:
    full_min: float = 0.8
    partial_min: float = 0.4
    partial_max: float = 0.6
    unknown_max: float = 0.2
    unknown_min_count: int = 3

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LabelThresholds":
        return cls(**d)


DEFAULT_THRESHOLDS = LabelThresholds()


def label_from_score(
    score: float, unknown_count: int, thresholds: LabelThresholds = DEFAULT_THRESHOLDS
) -> CoverageLabel:
    steps = score / POINTS_PER_YES
    if not math.isfinite(score) or abs(steps - round(steps)) > _EPS or not 0 <= round(steps) <= 5:
        raise InvalidScore(f"score {score!r} is not a multiple of 0.2 in [0, 1]")
    if not 0 <= unknown_count <= 5 or round(steps) + unknown_count > 5:
        raise InvalidScore(f"unknown_count {unknown_count} inconsistent with score {score}")
    if score >= thresholds.full_min - _EPS:
        return CoverageLabel.FULL
    if thresholds.partial_min - _EPS <= score <= thresholds.partial_max + _EPS:
        return CoverageLabel.PARTIAL
    if score <= thresholds.unknown_max + _EPS and unknown_count >= thresholds.unknown_min_count:
        return CoverageLabel.UNKNOWN
    return CoverageLabel.NO


def reconcile(a: CoverageLabel, b: CoverageLabel) -> CoverageLabel:
    """Keep the more cautious of two labels."""
    return a if a <= b else b


def reconcile_all(labels: Iterable[CoverageLabel]) -> CoverageLabel:
    return reduce(reconcile, labels)


@dataclass(frozen=True)
class AssessmentRecord:
    attack_id: str
    dataset_name: str
    assessor_id: str
    criteria: CriteriaVector
    score: float
    label: CoverageLabel
    rationale: str = ""
    cache_key: str = ""
    flags: tuple[str, ...] = field(default=())

    @property
    def key(self) -> tuple[str, str]:
        return (self.attack_id, self.dataset_name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "attack_id": self.attack_id,
            "dataset_name": self.dataset_name,
            "assessor_id": self.assessor_id,
            "criteria": self.criteria.to_dict(),
            "score": self.score,
            "label": self.label.value,
            "rationale": self.rationale,
            "cache_key": self.cache_key,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AssessmentRecord":
        return cls(
            attack_id=d["attack_id"],
            dataset_name=d["dataset_name"],
            assessor_id=d["assessor_id"],
            criteria=CriteriaVector.from_dict(d["criteria"]),
            score=float(d["score"]),
            label=CoverageLabel(d["label"]),
            rationale=d.get("rationale", ""),
            cache_key=d.get("cache_key", ""),
            flags=tuple(d.get("flags", ())),
        )


def make_record(
    attack_id: str,
    dataset_name: str,
    assessor_id: str,
    criteria: CriteriaVector,
    thresholds: LabelThresholds = DEFAULT_THRESHOLDS,
    **extra,
) -> AssessmentRecord:
    score = score_criteria(criteria)
    label = label_from_score(score, criteria.unknown_count, thresholds)
    return AssessmentRecord(attack_id, dataset_name, assessor_id, criteria, score, label, **extra)
