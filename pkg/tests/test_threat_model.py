import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nidsgap.errors import SchemaViolation, UnknownEntity
from nidsgap.stix_ingest import parse_bundle
from nidsgap.threat_model import (
    EntitySelection,
    OccurrenceMap,
    build_occurrence_map,
    extract_entity_techniques,
    load_selection,
)

from conftest import BundleBuilder


def graph_of(builder):
    return parse_bundle(builder.text(), "Enterprise")


def test_isolated_entity_has_no_techniques(bundle):
    g = graph_of(bundle.entity("G0034").technique("T1570"))
    assert extract_entity_techniques(g, "G0034") == set()


def test_extract_direct_uses(bundle):
    bundle.entity("G0049").technique("T1570").technique("T0805").technique("T1110")
    bundle.uses("G0049", "T1570", "T0805")
    assert extract_entity_techniques(graph_of(bundle), "G0049") == {"T1570", "T0805"}


def test_unknown_entity(bundle):
    with pytest.raises(UnknownEntity):
        extract_entity_techniques(graph_of(bundle.entity("G0034")), "G9999")


def test_campaign_attribution_not_followed(bundle):
    bundle.entity("C0028").entity("G0034").technique("T1570").technique("T0805")
    bundle.uses("C0028", "T1570").uses("G0034", "T0805").uses("C0028", "G0034", rtype="attributed-to")
    assert extract_entity_techniques(graph_of(bundle), "C0028") == {"T1570"}


def test_shared_technique_counted_per_entity(bundle):
    bundle.entity("G0034").entity("S0368").technique("T1021.002")
    bundle.uses("G0034", "T1021.002").uses("S0368", "T1021.002")
    occ = build_occurrence_map(graph_of(bundle), EntitySelection.of(["G0034", "S0368"]))
    assert occ.occurrence_count("T1021.002") == 2


def test_single_entity_three_techniques(bundle):
    bundle.entity("S0604").technique("T0855").technique("T0843").technique("T0805")
    bundle.uses("S0604", "T0855", "T0843", "T0805")
    occ = build_occurrence_map(graph_of(bundle), EntitySelection.of(["S0604"]))
    assert len(occ) == 3
    assert set(occ.counts().values()) == {1}


def test_unused_techniques_absent(bundle):
    bundle.entity("G0034").entity("G0032").technique("T1570").technique("T1110")
    bundle.uses("G0032", "T1110")
    occ = build_occurrence_map(graph_of(bundle), EntitySelection.of(["G0034"]))
    assert len(occ) == 0


def test_strict_and_lenient_unknown_ids(bundle, caplog):
    bundle.entity("G0034").technique("T1570").uses("G0034", "T1570")
    g = graph_of(bundle)
    sel = EntitySelection.of(["G0034", "G0088"])
    with pytest.raises(UnknownEntity):
        build_occurrence_map(g, sel, strict=True)
    occ = build_occurrence_map(g, sel, strict=False)
    assert occ.counts() == {"T1570": 1}
    assert "G0088" in caplog.text


def test_selection_validation():
    with pytest.raises(SchemaViolation):
        EntitySelection.of(["G0034", "G0034"])
    with pytest.raises(SchemaViolation):
        EntitySelection.of(["T1570"])


def test_default_selection_is_the_fifteen_energy_entities():
    sel = load_selection()
    assert len(sel.entity_ids) == 15
    assert sum(e.startswith("S") for e in sel.entity_ids) == 7
    assert sum(e.startswith("C") for e in sel.entity_ids) == 3
    assert sum(e.startswith("G") for e in sel.entity_ids) == 5
    assert {"S0603", "S0604", "C0028", "G0034", "G0088"} <= set(sel.entity_ids)


def test_selection_file(tmp_path):
    path = tmp_path / "sel.json"
    path.write_text(json.dumps(["S0603", "G0034"]))
    assert load_selection(path).entity_ids == ("S0603", "G0034")
    path.write_text('{"ids": []}')
    with pytest.raises(SchemaViolation):
        load_selection(path)


def test_occurrence_map_round_trip():
    occ = OccurrenceMap({"T1570": frozenset({"G0034", "S0368"})})
    assert OccurrenceMap.from_dict(json.loads(json.dumps(occ.to_dict()))) == occ


# random bipartite usage graphs for the properties below
ENTITY_POOL = [f"G{n:04d}" for n in range(1, 7)] + [f"S{n:04d}" for n in range(1, 5)]
TECH_POOL = [f"T{n:04d}" for n in range(1000, 1012)]


@st.composite
def usage_graphs(draw):
    edges = draw(st.sets(st.tuples(st.sampled_from(ENTITY_POOL), st.sampled_from(TECH_POOL)), max_size=40))
    b = BundleBuilder()
    for e in ENTITY_POOL:
        b.entity(e)
    for t in TECH_POOL:
        b.technique(t)
    for e, t in sorted(edges):
        b.uses(e, t)
    g = parse_bundle(b.text(), "Enterprise")
    a = draw(st.lists(st.sampled_from(ENTITY_POOL), unique=True, max_size=6))
    extra = draw(st.lists(st.sampled_from([e for e in ENTITY_POOL if e not in a]), unique=True, max_size=4))
    return g, a, extra


@given(usage_graphs(), st.randoms())
def test_occurrence_properties(case, rnd):
    g, a, extra = case
    occ_a = build_occurrence_map(g, EntitySelection.of(a))
    occ_ab = build_occurrence_map(g, EntitySelection.of(a + extra))
    assert all(1 <= c <= len(a) for c in occ_a.counts().values())
    assert all(occ_ab.occurrence_count(t) >= c for t, c in occ_a.counts().items())
    assert all(users <= set(a) for users in occ_a.users.values())
    shuffled = list(a)
    rnd.shuffle(shuffled)
    assert build_occurrence_map(g, EntitySelection.of(shuffled)) == occ_a
