"""Dataset knowledge base: structured profiles of candidate NIDS datasets.

File format::

    {"schema_version": "1", "profiles": [{...}, ...]}

Each profile needs ``name``, ``year``, ``domain``, ``industrial_protocols``,
``enterprise_protocols``, ``attack_classes``, ``scenario_count``,
``feature_granularity`` and ``limitations``. Any other key is kept as an
opaque annotation and written back on dump.

``domain`` is one of EnterpriseIT / IndustrialOT / Hybrid.
``feature_granularity`` is one of FlowLevel / PacketLevel / ProcessTelemetry /
Mixed, where Mixed means packet captures plus process telemetry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Any

from .errors import DuplicateName, SchemaViolation

SCHEMA_VERSION = "1"

ATTACK_CLASS_VOCABULARY = (
    "brute-force",
    "DoS/DDoS",
    "botnet",
    "web",
    "heartbleed",
    "infiltration",
    "cyber-physical",
    "protocol-manipulation",
    "lateral-movement",
    "multi-stage",
)


class Domain(str, Enum):
    ENTERPRISE_IT = "EnterpriseIT"
    INDUSTRIAL_OT = "IndustrialOT"
    HYBRID = "Hybrid"


class Granularity(str, Enum):
    FLOW_LEVEL = "FlowLevel"
    PACKET_LEVEL = "PacketLevel"
    PROCESS_TELEMETRY = "ProcessTelemetry"
    MIXED = "Mixed"


_REQUIRED = (
    "name",
    "year",
    "domain",
    "industrial_protocols",
    "enterprise_protocols",
    "attack_classes",
    "scenario_count",
    "feature_granularity",
    "limitations",
)
_LIST_FIELDS = ("industrial_protocols", "enterprise_protocols", "attack_classes", "limitations")


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    year: int
    domain: Domain
    industrial_protocols: tuple[str, ...] = ()
    enterprise_protocols: tuple[str, ...] = ()
    attack_classes: tuple[str, ...] = ()
    scenario_count: int = 0
    feature_granularity: Granularity = Granularity.PACKET_LEVEL
    limitations: tuple[str, ...] = ()
    annotations: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    @property
    def protocols(self) -> tuple[str, ...]:
        return self.industrial_protocols + self.enterprise_protocols

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "year": self.year,
            "domain": self.domain.value,
            "industrial_protocols": list(self.industrial_protocols),
            "enterprise_protocols": list(self.enterprise_protocols),
            "attack_classes": list(self.attack_classes),
            "scenario_count": self.scenario_count,
            "feature_granularity": self.feature_granularity.value,
            "limitations": list(self.limitations),
        }
        d.update(self.annotations)
        return d

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetProfile":
        missing = [k for k in _REQUIRED if k not in d]
        if missing:
            raise SchemaViolation(f"profile {d.get('name', '?')!r} missing fields {missing}")
        try:
            domain = Domain(d["domain"])
            granularity = Granularity(d["feature_granularity"])
        except ValueError as exc:
            raise SchemaViolation(f"profile {d['name']!r}: {exc}") from None
        for key in _LIST_FIELDS:
            if not isinstance(d[key], list) or not all(isinstance(x, str) for x in d[key]):
                raise SchemaViolation(f"profile {d['name']!r}: {key} must be a list of strings")
        for key in ("year", "scenario_count"):
            if not isinstance(d[key], int) or isinstance(d[key], bool):
                raise SchemaViolation(f"profile {d['name']!r}: {key} must be an integer")
        return cls(
            name=d["name"],
            year=d["year"],
            domain=domain,
            industrial_protocols=tuple(d["industrial_protocols"]),
            enterprise_protocols=tuple(d["enterprise_protocols"]),
            attack_classes=tuple(d["attack_classes"]),
            scenario_count=d["scenario_count"],
            feature_granularity=granularity,
            limitations=tuple(d["limitations"]),
            annotations={k: v for k, v in d.items() if k not in _REQUIRED},
        )


def validate_profile(profile: DatasetProfile) -> list[str]:
    """Human-readable problems with ``profile``; empty when it is usable."""
    findings = []
    if not isinstance(profile.name, str) or not profile.name.strip():
        findings.append("name must be a non-empty string")
    if not isinstance(profile.domain, Domain):
        findings.append(f"domain {profile.domain!r} is not one of {[d.value for d in Domain]}")
    if not isinstance(profile.feature_granularity, Granularity):
        findings.append(f"feature_granularity {profile.feature_granularity!r} is not a known granularity")
    if not isinstance(profile.scenario_count, int) or profile.scenario_count < 0:
        findings.append(f"scenario_count must be a non-negative integer, got {profile.scenario_count!r}")
    if not isinstance(profile.year, int) or not 1990 <= profile.year <= 2100:
        findings.append(f"year {profile.year!r} looks wrong")
    if profile.domain == Domain.INDUSTRIAL_OT and not profile.industrial_protocols:
        findings.append("an IndustrialOT dataset should list at least one industrial protocol")
    if not profile.attack_classes:
        findings.append("attack_classes is empty; attack-type matching will always fail")
    return findings


@dataclass(frozen=True)
class KnowledgeBase:
    profiles: tuple[DatasetProfile, ...]
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        names = [p.name for p in self.profiles]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise DuplicateName(f"duplicate dataset names: {dupes}")

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.profiles]

    def __getitem__(self, name: str) -> DatasetProfile:
        for p in self.profiles:
            if p.name == name:
                return p
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.profiles)

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": self.schema_version, "profiles": [p.to_dict() for p in self.profiles]}


def loads_profiles(text: str) -> KnowledgeBase:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"knowledge base is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("profiles"), list):
        raise SchemaViolation('knowledge base needs a "profiles" array')
    profiles = tuple(DatasetProfile.from_dict(p) for p in data["profiles"])
    for p in profiles:
        problems = validate_profile(p)
        if any("scenario_count" in f or "domain" in f for f in problems):
            raise SchemaViolation(f"profile {p.name!r}: {'; '.join(problems)}")
    return KnowledgeBase(profiles, str(data.get("schema_version", SCHEMA_VERSION)))


def load_profiles(path=None) -> KnowledgeBase:
    """Load a KB file; ``None`` loads the shipped five-dataset KB."""
    if path is None:
        return loads_profiles(resources.files("nidsgap.data").joinpath("default_kb.json").read_text())
    with open(path, encoding="utf-8") as fh:
        return loads_profiles(fh.read())


def dumps_profiles(kb: KnowledgeBase) -> str:
    return json.dumps(kb.to_dict(), indent=2, ensure_ascii=False) + "\n"
