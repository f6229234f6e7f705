"""Deterministic, offline stand-in for a model-based assessor.

Every criterion is answered from structured matching between a technique
record and a dataset profile. The tables below are the whole policy and can
be replaced through :class:`RuleConfig`.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any

from ..dataset_kb import DatasetProfile, Domain, Granularity
from ..stix_ingest import Matrix, TechniqueRecord
from .scoring import (
    DEFAULT_THRESHOLDS,
    Answer,
    AssessmentRecord,
    CriteriaVector,
    LabelThresholds,
    make_record,
)

RULES_ASSESSOR_ID = "rules/v1"

# tactic shortname (with any "-ics" suffix stripped) -> attack-class tags
TACTIC_CLASSES: dict[str, tuple[str, ...]] = {
    "credential-access": ("brute-force",),
    "command-and-control": ("botnet",),
    "lateral-movement": ("lateral-movement", "multi-stage"),
    "initial-access": ("infiltration", "multi-stage"),
    "discovery": ("infiltration",),
    "exfiltration": ("infiltration",),
}

# applied only to techniques that belong to the ICS matrix
ICS_TACTIC_CLASSES: dict[str, tuple[str, ...]] = {
    "impair-process-control": ("cyber-physical", "protocol-manipulation"),
    "inhibit-response-function": ("cyber-physical",),
    "impact": ("cyber-physical",),
    "execution": ("cyber-physical",),
}

NAME_KEYWORD_CLASSES: dict[str, tuple[str, ...]] = {
    "brute force": ("brute-force",),
    "denial of service": ("DoS/DDoS",),
    "network flood": ("DoS/DDoS",),
    "exploit public-facing": ("web",),
    "drive-by": ("web",),
    "web ": ("web",),
    "web shell": ("web",),
    "exploitation of remote services": ("infiltration", "lateral-movement"),
    "remote services": ("lateral-movement",),
    "lateral tool transfer": ("lateral-movement",),
    "unauthorized command": ("protocol-manipulation",),
    "command message": ("protocol-manipulation",),
    "reporting message": ("protocol-manipulation",),
    "modify parameter": ("protocol-manipulation",),
    "modify program": ("protocol-manipulation",),
    "program download": ("protocol-manipulation",),
    "program upload": ("protocol-manipulation",),
    "manipulat": ("protocol-manipulation",),
    "spoof": ("protocol-manipulation",),
    "i/o": ("protocol-manipulation",),
}

# canonical protocol -> regex over lower-cased text
PROTOCOL_PATTERNS: dict[str, str] = {
    "modbus": r"modbus",
    "dnp3": r"\bdnp3\b",
    "iec-104": r"iec[ -]?60870-5-104|\biec[ -]?104\b",
    "iec-61850": r"iec[ -]?61850|\bgoose\b",
    "enip": r"ethernet/ip|\bcip\b|\benip\b",
    "opc": r"\bopc(?:[ -]?ua)?\b",
    "s7": r"\bs7(?:comm)?\b",
    "profinet": r"profinet",
    "http": r"\bhttp\b(?!s)",
    "https": r"\bhttps\b|\btls\b|\bssl\b",
    "ssh": r"\bssh\b",
    "smb": r"\bsmb\b|admin shares",
    "rdp": r"\brdp\b|remote desktop protocol",
    "ftp": r"\bs?ftp\b",
    "dns": r"\bdns\b",
    "smtp": r"\bsmtp\b",
    "ldap": r"\bldap\b",
    "kerberos": r"kerberos",
    "vnc": r"\bvnc\b",
    "telnet": r"\btelnet\b",
    "snmp": r"\bsnmp\b",
}

PAYLOAD_CLASSES = frozenset({"protocol-manipulation", "cyber-physical", "web", "heartbleed"})
FLOW_CLASSES = frozenset({"dos/ddos", "brute-force", "botnet", "infiltration", "lateral-movement"})
PROCESS_CLASSES = frozenset({"cyber-physical"})


@dataclass(frozen=True)
class RuleConfig:
    tactic_classes: dict[str, tuple[str, ...]] = field(default_factory=lambda: dict(TACTIC_CLASSES))
    ics_tactic_classes: dict[str, tuple[str, ...]] = field(default_factory=lambda: dict(ICS_TACTIC_CLASSES))
    name_keyword_classes: dict[str, tuple[str, ...]] = field(default_factory=lambda: dict(NAME_KEYWORD_CLASSES))
    protocol_patterns: dict[str, str] = field(default_factory=lambda: dict(PROTOCOL_PATTERNS))
    min_examples: int = 5
    thresholds: LabelThresholds = DEFAULT_THRESHOLDS

    def to_dict(self) -> dict[str, Any]:
        return {
            "tactic_classes": {k: list(v) for k, v in sorted(self.tactic_classes.items())},
            "ics_tactic_classes": {k: list(v) for k, v in sorted(self.ics_tactic_classes.items())},
            "name_keyword_classes": {k: list(v) for k, v in sorted(self.name_keyword_classes.items())},
            "protocol_patterns": dict(sorted(self.protocol_patterns.items())),
            "min_examples": self.min_examples,
            "thresholds": self.thresholds.to_dict(),
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


DEFAULT_RULES = RuleConfig()


def _tactic_name(phase: str) -> str:
    return phase[:-4] if phase.endswith("-ics") else phase


def technique_classes(technique: TechniqueRecord, config: RuleConfig = DEFAULT_RULES) -> frozenset[str]:
    """Attack-class tags implied by a technique's tactics and name."""
    tags: set[str] = set()
    for phase in technique.tactics:
        tactic = _tactic_name(phase)
        tags.update(config.tactic_classes.get(tactic, ()))
        if Matrix.ICS in technique.matrices:
            tags.update(config.ics_tactic_classes.get(tactic, ()))
    name = technique.name.casefold() + " "
    for keyword, classes in config.name_keyword_classes.items():
        if keyword in name:
            tags.update(classes)
    return frozenset(tags)


def canonical_protocols(text: str, config: RuleConfig = DEFAULT_RULES) -> frozenset[str]:
    text = text.casefold()
    return frozenset(p for p, pattern in config.protocol_patterns.items() if re.search(pattern, text))


def _feature_answer(classes: frozenset[str], granularity: Granularity) -> tuple[Answer, str]:
    folded = {c.casefold() for c in classes}
    payload = bool(folded & PAYLOAD_CLASSES)
    flow = bool(folded & FLOW_CLASSES)
    if not payload and not flow:
        return Answer.UNKNOWN, "no feature requirement could be derived"
    if granularity in (Granularity.PACKET_LEVEL, Granularity.MIXED):
        return Answer.YES, "packet-level capture exposes payload and flow features"
    if granularity is Granularity.FLOW_LEVEL:
        if flow:
            return Answer.YES, "flow-visible behaviour"
        return Answer.NO, "needs payload features, dataset is flow-level only"
    if folded & PROCESS_CLASSES:
        return Answer.YES, "process telemetry shows physical effects"
    return Answer.NO, "process telemetry does not expose network behaviour"


def assess_rule_based(
    technique: TechniqueRecord, profile: DatasetProfile, config: RuleConfig = DEFAULT_RULES
) -> AssessmentRecord:
    reasons = []

    classes = technique_classes(technique, config)
    offered = {c.casefold() for c in profile.attack_classes}
    if not classes:
        attack = Answer.UNKNOWN
        reasons.append("attack_type_present=Unknown: no attack class derivable from tactics or name")
    else:
        hit = sorted(c for c in classes if c.casefold() in offered)
        attack = Answer.YES if hit else Answer.NO
        reasons.append(f"attack_type_present={attack.value}: technique {sorted(classes)} vs dataset {sorted(offered)}")

    named = canonical_protocols(
        " ".join((technique.name, technique.description, *technique.data_sources)), config
    )
    recorded = canonical_protocols(" | ".join(profile.protocols), config)
    if not named:
        protocol = Answer.UNKNOWN
        reasons.append("protocol_recorded=Unknown: technique names no protocol")
    else:
        protocol = Answer.YES if named & recorded else Answer.NO
        reasons.append(f"protocol_recorded={protocol.value}: technique {sorted(named)} vs dataset {sorted(recorded)}")

    if profile.domain is Domain.HYBRID:
        domain = Answer.YES
    elif profile.domain is Domain.ENTERPRISE_IT:
        domain = Answer.YES if Matrix.ENTERPRISE in technique.matrices else Answer.NO
    else:
        domain = Answer.YES if Matrix.ICS in technique.matrices else Answer.NO
    reasons.append(
        f"domain_match={domain.value}: {sorted(m.value for m in technique.matrices)} vs {profile.domain.value}"
    )

    feature, why = _feature_answer(classes, profile.feature_granularity)
    reasons.append(f"feature_sufficiency={feature.value}: {why}")

    if profile.scenario_count >= config.min_examples:
        examples = Answer.YES
    elif profile.scenario_count > 0:
        examples = Answer.UNKNOWN
    else:
        examples = Answer.NO
    reasons.append(f"example_adequacy={examples.value}: {profile.scenario_count} scenarios")

    criteria = CriteriaVector(attack, protocol, domain, feature, examples)
    key_blob = json.dumps(
        [RULES_ASSESSOR_ID, technique.to_dict(), profile.content_hash(), config.content_hash()],
        sort_keys=True,
    )
    return make_record(
        technique.attack_id,
        profile.name,
        RULES_ASSESSOR_ID,
        criteria,
        config.thresholds,
        rationale="; ".join(reasons),
        cache_key=hashlib.sha256(key_blob.encode()).hexdigest()[:16],
    )
