import pytest

from nidsgap.coverage import CoverageLabel as L
from nidsgap.coverage.rules import (
    DEFAULT_RULES,
    RULES_ASSESSOR_ID,
    RuleConfig,
    assess_rule_based,
    canonical_protocols,
    technique_classes,
)
from nidsgap.dataset_kb import Domain, Granularity, load_profiles
from nidsgap.stix_ingest import Matrix

from conftest import make_technique
from test_dataset_kb import profile

KB = load_profiles()


def ics(tid, name, tactics=(), data_sources=(), description=""):
    return make_technique(
        tid, data_sources, (Matrix.ICS,), name=name, tactics=tuple(tactics), description=description
    )


def ent(tid, name, tactics=(), data_sources=(), description=""):
    return make_technique(tid, data_sources, name=name, tactics=tuple(tactics), description=description)


def answers(rec):
    return rec.criteria.to_dict()


def test_classes_from_tactics_and_name():
    t = ics("T0855", "Unauthorized Command Message", ["impair-process-control-ics"])
    assert technique_classes(t) == {"cyber-physical", "protocol-manipulation"}
    assert technique_classes(ent("T1110", "Brute Force", ["credential-access"])) == {"brute-force"}
    assert technique_classes(ent("T1082", "System Information Discovery")) == frozenset()


def test_ics_tactic_table_only_for_ics_techniques():
    assert technique_classes(ent("T1499", "Endpoint Denial of Service", ["impact"])) == {"DoS/DDoS"}


@pytest.mark.parametrize(
    "text,expected",
    [
        ("Modbus/TCP", {"modbus"}),
        ("IEC 60870-5-104", {"iec-104"}),
        ("EtherNet/IP (CIP)", {"enip"}),
        ("SMB/Windows Admin Shares", {"smb"}),
        ("HTTPS and HTTP", {"http", "https"}),
        ("Process: Process Creation", set()),
    ],
)
def test_protocol_canonicalisation(text, expected):
    assert canonical_protocols(text) == expected


def test_modbus_command_against_cic_modbus():
    t = ics("T0855", "Unauthorized Command Message", ["impair-process-control-ics"],
            description="Adversaries send Modbus write requests to field devices.")
    rec = assess_rule_based(t, KB["CIC-Modbus2023"])
    assert answers(rec) == {
        "attack_type_present": "Yes",
        "protocol_recorded": "Yes",
        "domain_match": "Yes",
        "feature_sufficiency": "Yes",
        "example_adequacy": "Yes",
    }
    assert rec.label is L.FULL
    assert rec.assessor_id == RULES_ASSESSOR_ID


def test_same_technique_against_enterprise_flow_dataset():
    t = ics("T0855", "Unauthorized Command Message", ["impair-process-control-ics"],
            description="Adversaries send Modbus write requests to field devices.")
    rec = assess_rule_based(t, KB["CIC-IDS2017"])
    assert answers(rec) == {
        "attack_type_present": "No",
        "protocol_recorded": "No",
        "domain_match": "No",
        "feature_sufficiency": "No",
        "example_adequacy": "Yes",
    }
    assert rec.label is L.NO


def test_hybrid_domain_always_matches():
    for t in (ent("T1570", "Lateral Tool Transfer"), ics("T0843", "Program Download")):
        assert assess_rule_based(t, KB["Sherlock"]).criteria.domain_match.value == "Yes"


def test_unknowns_when_nothing_derivable():
    t = ent("T1082", "System Information Discovery")
    rec = assess_rule_based(t, KB["Sherlock"])
    a = answers(rec)
    assert a["attack_type_present"] == a["protocol_recorded"] == a["feature_sufficiency"] == "Unknown"
    # 3 scenarios: fewer than the minimum but non-zero
    assert a["example_adequacy"] == "Unknown"
    assert rec.label is L.UNKNOWN


@pytest.mark.parametrize("count,expected", [(0, "No"), (1, "Unknown"), (4, "Unknown"), (5, "Yes"), (36, "Yes")])
def test_example_adequacy(count, expected):
    rec = assess_rule_based(ent("T1110", "Brute Force"), profile(scenario_count=count))
    assert rec.criteria.example_adequacy.value == expected


@pytest.mark.parametrize(
    "granularity,name,expected",
    [
        (Granularity.FLOW_LEVEL, "Brute Force", "Yes"),
        (Granularity.FLOW_LEVEL, "Modify Parameter", "No"),
        (Granularity.PACKET_LEVEL, "Modify Parameter", "Yes"),
        (Granularity.MIXED, "Brute Force", "Yes"),
        (Granularity.PROCESS_TELEMETRY, "Brute Force", "No"),
    ],
)
def test_feature_sufficiency(granularity, name, expected):
    rec = assess_rule_based(ent("T0001", name), profile(feature_granularity=granularity))
    assert rec.criteria.feature_sufficiency.value == expected


def test_process_telemetry_sees_cyber_physical():
    t = ics("T0831", "Manipulation of Control", ["impact-ics"])
    rec = assess_rule_based(t, profile(feature_granularity=Granularity.PROCESS_TELEMETRY))
    assert rec.criteria.feature_sufficiency.value == "Yes"


def test_enterprise_dataset_rejects_ics_only_technique():
    rec = assess_rule_based(ics("T0843", "Program Download"), profile(domain=Domain.ENTERPRISE_IT))
    assert rec.criteria.domain_match.value == "No"


def test_deterministic_and_keyed_on_config():
    t = ent("T1110", "Brute Force", ["credential-access"])
    a = assess_rule_based(t, KB["CIC-IDS2017"])
    assert a == assess_rule_based(t, KB["CIC-IDS2017"])
    assert a.cache_key == assess_rule_based(t, KB["CIC-IDS2017"]).cache_key
    other = assess_rule_based(t, KB["CIC-IDS2017"], RuleConfig(min_examples=7))
    assert other.cache_key != a.cache_key


def test_rationale_mentions_every_criterion():
    rec = assess_rule_based(ent("T1110", "Brute Force"), KB["CIC-IDS2017"])
    for name in rec.criteria.to_dict():
        assert name in rec.rationale


def test_default_rules_hash_is_stable():
    assert DEFAULT_RULES.content_hash() == RuleConfig().content_hash()
