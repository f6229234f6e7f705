# Rank the extracted techniques by weighted risk, then keep the ones a
# network sensor could plausibly see.
from pathlib import Path

import numpy as np

from nidsgap.detectability import classify_technique, filter_network_detectable, summarize
from nidsgap.risk_scoring import COMBINER_FORMULAS, BaseRiskTable, frequency_score, rank_techniques
from nidsgap.stix_ingest import load_bundle, merge_matrices
from nidsgap.threat_model import EntitySelection, build_occurrence_map

SMOKE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "smoke"

graph = merge_matrices(load_bundle(SMOKE / "enterprise.json", "Enterprise"), load_bundle(SMOKE / "ics.json", "ICS"))
occ = build_occurrence_map(graph, EntitySelection.of(sorted(graph.entities)))

# frequency grows with the log of the count, so heavy hitters do not swamp the rest
counts = np.arange(0, 32)
print("log2(c+1) at c = 0, 1, 3, 7, 15, 31:", [frequency_score(int(c)) for c in (0, 1, 3, 7, 15, 31)])
print("spread of frequency over 0..31:", frequency_score(int(counts.max())) - frequency_score(int(counts.min())))

# a flat base of 5 unless a table says otherwise; bump lateral movement over SMB
table = BaseRiskTable({"T1021.002": 8.0}, default_value=5.0)
for combiner in sorted(COMBINER_FORMULAS):
    print()
    print(f"combiner {combiner!r}: {COMBINER_FORMULAS[combiner]}")
    for p in rank_techniques(occ, table, combiner)[:5]:
        print(f"  {p.attack_id:10} count={p.occurrence_count} freq={p.frequency_score:.2f} "
              f"base={p.base_risk:.1f} risk={p.weighted_risk:.2f}")

records = [graph.techniques[t] for t in occ.counts()]
print()
print("detectability classes:", summarize(records))
for r in records:
    print(f"  {r.attack_id:10} {classify_technique(r).value:13} {list(r.data_sources)}")

kept = filter_network_detectable(records)
strict = filter_network_detectable(records, include_partial=False)
print()
print(f"network-detectable: {len(kept)} of {len(records)} (with Partial), {len(strict)} without")
