# Assess a handful of techniques against the shipped dataset profiles with the
# offline rule assessor, then with a stand-in model service to show caching.
import tempfile

from nidsgap.coverage import CoverageLabel, ModelServiceConfig, RemoteAssessor, assess_rule_based, reconcile
from nidsgap.dataset_kb import load_profiles
from nidsgap.stix_ingest import Matrix, TechniqueRecord

kb = load_profiles()
for p in kb.profiles:
    print(f"{p.name:15} {p.domain.value:12} {p.feature_granularity.value:12} "
          f"{p.scenario_count:3} scenarios  {', '.join(p.protocols)}")

techniques = [
    TechniqueRecord("T0855", "Unauthorized Command Message", frozenset({Matrix.ICS}),
                    ("Network Traffic: Network Traffic Content",), tactics=("impair-process-control-ics",),
                    description="Send unauthorized Modbus or IEC 104 commands to outstations."),
    TechniqueRecord("T1110", "Brute Force", frozenset({Matrix.ENTERPRISE}),
                    ("User Account: User Account Authentication",), tactics=("credential-access",),
                    description="Guess SSH or FTP passwords."),
    TechniqueRecord("T1021.002", "SMB/Windows Admin Shares", frozenset({Matrix.ENTERPRISE}),
                    ("Network Traffic: Network Connection Creation",), tactics=("lateral-movement",)),
]

print()
header = "".join(f"{p.name:>16}" for p in kb.profiles)
print(f"{'rules':12}{header}")
rules = {}
for t in techniques:
    row = []
    for p in kb.profiles:
        rec = assess_rule_based(t, p)
        rules[rec.key] = rec
        row.append(f"{rec.label.value} {rec.score:.1f}")
    print(f"{t.attack_id:12}" + "".join(f"{c:>16}" for c in row))

print()
print("why T0855 x CIC-IDS2017:")
for part in rules[("T0855", "CIC-IDS2017")].rationale.split("; "):
    print("   ", part)


# a fake endpoint: answers yes to everything for ICS techniques, unknown otherwise
def fake_service(url, headers, body, timeout):
    blocks = []
    for line in body["prompt"].splitlines():
        if line.startswith("TECHNIQUE T"):
            tid = line.split()[1]
            word = "yes" if tid.startswith("T0") else "unknown"
            blocks.append(f"TECHNIQUE {tid}\n" + "\n".join(f"Q{i}: {word}" for i in range(1, 6)))
    fake_service.calls += 1
    return {"text": "\n".join(blocks)}


fake_service.calls = 0

with tempfile.TemporaryDirectory() as cache:
    cfg = ModelServiceConfig("http://localhost/unused", "stand-in", batch_size=2, cache_dir=cache)
    client = RemoteAssessor(cfg, transport=fake_service)
    remote = [r for p in kb.profiles for r in client.assess(techniques, p)]
    print()
    print("service calls, cold cache:", fake_service.calls)
    RemoteAssessor(cfg, transport=fake_service).assess(techniques, kb["SWaT"])
    print("service calls after a warm rerun:", fake_service.calls)

# the more cautious label wins when the two assessors disagree
print()
changed = 0
for r in remote:
    merged = reconcile(r.label, rules[r.key].label)
    changed += merged is not r.label
print("pairs where reconciliation lowered the model's label:", changed, "of", len(remote))
print("label order:", " < ".join(l.value for l in sorted(CoverageLabel, key=lambda l: l.numeric_value)))
