"""Frequency scoring and weighted risk ranking of techniques."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from .errors import SchemaViolation, UnknownCombiner
from .threat_model import OccurrenceMap

Combiner = Callable[[float, float], float]


def _default_combiner(base_risk: float, freq: float) -> float:
    return base_risk * (0.5 + 0.1 * freq)


def _additive_combiner(base_risk: float, freq: float) -> float:
    return 0.5 * base_risk + freq


COMBINERS: dict[str, Combiner] = {
    "default": _default_combiner,
    "additive": _additive_combiner,
}

COMBINER_FORMULAS = {
    "default": "base_risk * (0.5 + 0.1 * frequency_score)",
    "additive": "0.5 * base_risk + frequency_score",
}


def register_combiner(name: str, fn: Combiner, formula: str = "") -> None:
    """Make ``fn`` selectable via ``--risk-combiner name``.

    The function must be strictly increasing in both arguments and positive
    for base_risk >= 1; that is not checked here.
    """
    COMBINERS[name] = fn
    COMBINER_FORMULAS[name] = formula or getattr(fn, "__name__", name)


def frequency_score(occurrence_count: int) -> float:
    if occurrence_count < 0:
        raise ValueError("occurrence_count must be >= 0")
    return math.log2(occurrence_count + 1)


def weighted_risk(base_risk: float, freq: float, combiner: str = "default") -> float:
    try:
        fn = COMBINERS[combiner]
    except KeyError:
        raise UnknownCombiner(f"unknown risk combiner {combiner!r}; known: {sorted(COMBINERS)}") from None
    if not 1.0 <= base_risk <= 10.0:
        raise ValueError(f"base_risk {base_risk} outside [1, 10]")
    if freq < 0:
        raise ValueError("frequency_score must be >= 0")
    return fn(base_risk, freq)


@dataclass(frozen=True)
class BaseRiskTable:
    values: dict[str, float] = field(default_factory=dict)
    default_value: float = 5.0

    def __post_init__(self):
        for key, v in [*self.values.items(), ("_default", self.default_value)]:
            if not isinstance(v, (int, float)) or not 1.0 <= v <= 10.0:
                raise SchemaViolation(f"base risk for {key} must be in [1, 10], got {v!r}")

    def base_risk(self, attack_id: str) -> float:
        return float(self.values.get(attack_id, self.default_value))

    def to_dict(self) -> dict[str, float]:
        return {"_default": self.default_value, **dict(sorted(self.values.items()))}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "BaseRiskTable":
        d = dict(d)
        default = d.pop("_default", 5.0)
        return cls({k: float(v) for k, v in d.items()}, float(default))


def load_base_risk(path=None) -> BaseRiskTable:
    if path is None:
        text = resources.files("nidsgap.data").joinpath("base_risk.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    data = json.loads(text)
    if not isinstance(data, dict):
        raise SchemaViolation("base-risk table must be a JSON object")
    return BaseRiskTable.from_dict(data)


@dataclass(frozen=True)
class RiskProfile:
    attack_id: str
    occurrence_count: int
    frequency_score: float
    base_risk: float
    weighted_risk: float
    combiner: str = "default"

    def to_dict(self) -> dict:
        return {
            "attack_id": self.attack_id,
            "occurrence_count": self.occurrence_count,
            "frequency_score": self.frequency_score,
            "base_risk": self.base_risk,
            "weighted_risk": self.weighted_risk,
            "combiner": self.combiner,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RiskProfile":
        return cls(**d)


def rank_techniques(
    occurrence_map: OccurrenceMap, table: BaseRiskTable, combiner: str = "default"
) -> list[RiskProfile]:
    """Descending weighted risk; ties go to the lexicographically smaller id."""
    profiles = []
    for attack_id, count in occurrence_map.counts().items():
        freq = frequency_score(count)
        base = table.base_risk(attack_id)
        profiles.append(
            RiskProfile(attack_id, count, freq, base, weighted_risk(base, freq, combiner), combiner)
        )
    profiles.sort(key=lambda p: (-p.weighted_risk, p.attack_id))
    return profiles
