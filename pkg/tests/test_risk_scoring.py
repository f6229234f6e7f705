import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nidsgap.errors import SchemaViolation, UnknownCombiner
from nidsgap.risk_scoring import (
    COMBINERS,
    BaseRiskTable,
    frequency_score,
    load_base_risk,
    rank_techniques,
    register_combiner,
    weighted_risk,
)
from nidsgap.threat_model import OccurrenceMap


@pytest.mark.parametrize("count,expected", [(0, 0.0), (1, 1.0), (3, 2.0), (31, 5.0)])
def test_frequency_score_values(count, expected):
    assert frequency_score(count) == expected


def test_frequency_score_rejects_negative():
    with pytest.raises(ValueError):
        frequency_score(-1)


@given(st.integers(0, 10**6), st.integers(1, 10**6))
def test_frequency_score_strictly_monotone(c, step):
    assert frequency_score(c) < frequency_score(c + step)
    assert abs(frequency_score(c) - math.log2(c + 1)) <= 1e-12


def test_default_combiner_examples():
    assert weighted_risk(10, 5) == 10.0
    for b in (1.0, 2.5, 7.0, 10.0):
        assert weighted_risk(b, 0) == 0.5 * b


def test_unknown_combiner():
    with pytest.raises(UnknownCombiner):
        weighted_risk(5, 1, "nope")


def test_weighted_risk_domain_checks():
    with pytest.raises(ValueError):
        weighted_risk(0.5, 1)
    with pytest.raises(ValueError):
        weighted_risk(5, -1)


@pytest.mark.parametrize("name", sorted(COMBINERS))
@given(b=st.floats(1, 9.9), f=st.floats(0, 4.9), db=st.floats(0.01, 0.1), df=st.floats(0.01, 0.1))
def test_combiners_increase_in_both_arguments(name, b, f, db, df):
    r = weighted_risk(b, f, name)
    assert r > 0
    assert weighted_risk(b + db, f, name) > r
    assert weighted_risk(b, f + df, name) > r


def test_register_combiner():
    register_combiner("test-sum", lambda b, f: b + f, "base + freq")
    try:
        assert weighted_risk(2, 3, "test-sum") == 5
    finally:
        COMBINERS.pop("test-sum")


def test_tie_broken_by_attack_id():
    occ = OccurrenceMap({"T1570": frozenset({"G0034"}), "T0805": frozenset({"S0604"})})
    ranked = rank_techniques(occ, BaseRiskTable())
    assert [p.attack_id for p in ranked] == ["T0805", "T1570"]


def test_single_technique():
    assert len(rank_techniques(OccurrenceMap({"T1570": frozenset({"G0034"})}), BaseRiskTable())) == 1


def test_three_technique_order_by_frequency():
    # counts 7, 3, 1 -> frequency 3, 2, 1 under a uniform base of 5
    occ = OccurrenceMap(
        {
            "T0001": frozenset({"G0001"}),
            "T0003": frozenset({f"G000{i}" for i in range(1, 4)}),
            "T0007": frozenset({f"G000{i}" for i in range(1, 8)}),
        }
    )
    ranked = rank_techniques(occ, BaseRiskTable(default_value=5.0))
    assert [p.attack_id for p in ranked] == ["T0007", "T0003", "T0001"]
    assert [p.frequency_score for p in ranked] == [3.0, 2.0, 1.0]
    assert [p.weighted_risk for p in ranked] == pytest.approx([4.0, 3.5, 3.0], abs=1e-12)


ids = st.from_regex(r"T[0-9]{4}", fullmatch=True)


@given(
    st.dictionaries(ids, st.integers(1, 15), min_size=1, max_size=25),
    st.dictionaries(ids, st.integers(2, 20), max_size=25),
    st.sampled_from([0.25, 0.5, 2.0]),
)
def test_ranking_invariant_under_base_scaling(counts, halves, scale):
    # base values on a 0.5 grid scaled by powers of two stay exact, so ties survive scaling
    occ = OccurrenceMap({t: frozenset(f"G{i:04d}" for i in range(c)) for t, c in counts.items()})
    base = {t: h / 2 for t, h in halves.items()}
    table = BaseRiskTable(base, 5.0)
    scaled = {t: v * scale for t, v in base.items()}
    if all(1 <= v <= 10 for v in [*scaled.values(), 5.0 * scale]):
        ranked = [p.attack_id for p in rank_techniques(occ, table)]
        rescaled = [p.attack_id for p in rank_techniques(occ, BaseRiskTable(scaled, 5.0 * scale))]
        assert ranked == rescaled
    ranked = rank_techniques(occ, table)
    assert sorted(p.attack_id for p in ranked) == sorted(counts)
    assert all(a.weighted_risk >= b.weighted_risk for a, b in zip(ranked, ranked[1:]))


def test_base_risk_table_file(tmp_path):
    path = tmp_path / "risk.json"
    path.write_text(json.dumps({"T1021.002": 8.5, "_default": 4.0}))
    table = load_base_risk(path)
    assert table.base_risk("T1021.002") == 8.5
    assert table.base_risk("T1570") == 4.0
    path.write_text(json.dumps({"T1021.002": 11}))
    with pytest.raises(SchemaViolation):
        load_base_risk(path)


def test_shipped_table_defaults_to_five():
    assert load_base_risk().default_value == 5.0


def test_profiles_record_combiner():
    ranked = rank_techniques(OccurrenceMap({"T1570": frozenset({"G0034"})}), BaseRiskTable(), "additive")
    assert ranked[0].combiner == "additive"
    assert ranked[0].weighted_risk == 0.5 * 5.0 + 1.0
