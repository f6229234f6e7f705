# Walk through ingest and the threat model on the small fixture bundles.
# Point ENTERPRISE / ICS at real ATT&CK bundles to run it on the full matrices.
import os
from collections import Counter
from pathlib import Path

from nidsgap.stix_ingest import load_bundle, merge_matrices
from nidsgap.threat_model import EntitySelection, build_occurrence_map

HERE = Path(__file__).resolve().parent
SMOKE = HERE.parent / "tests" / "fixtures" / "smoke"
ENTERPRISE = os.environ.get("AUDITOR_ENTERPRISE_BUNDLE", SMOKE / "enterprise.json")
ICS = os.environ.get("AUDITOR_ICS_BUNDLE", SMOKE / "ics.json")

ent = load_bundle(ENTERPRISE, "Enterprise")
ics = load_bundle(ICS, "ICS")
print("enterprise:", len(ent.techniques), "techniques,", len(ent.entities), "entities")
print("ics:       ", len(ics.techniques), "techniques,", len(ics.entities), "entities")

graph = merge_matrices(ent, ics)
both = [t for t in graph.techniques.values() if len(t.matrices) == 2]
print("merged:    ", len(graph.techniques), "techniques;", len(both), "appear in both matrices")

# entities present in the graph; the shipped 15-entity selection needs real bundles
selection = EntitySelection.of(sorted(graph.entities))
occ = build_occurrence_map(graph, selection)
print()
print("techniques used by the selection:", len(occ))
for tid, n in sorted(occ.counts().items(), key=lambda kv: (-kv[1], kv[0])):
    users = ", ".join(sorted(occ.users[tid]))
    print(f"  {tid:10} {graph.techniques[tid].name:40} {n}  ({users})")

# how concentrated the usage is
print()
print("occurrence histogram:", dict(sorted(Counter(occ.counts().values()).items())))
