import json
import uuid
from pathlib import Path

import pytest

from nidsgap.stix_ingest import Matrix, TechniqueRecord

FIXTURES = Path(__file__).parent / "fixtures"
SMOKE = FIXTURES / "smoke"


def stix_id(kind, key):
    return f"{kind}--{uuid.uuid5(uuid.NAMESPACE_URL, key)}"


class BundleBuilder:
    """Build small STIX bundles in tests without hand-writing ids."""

    def __init__(self):
        self.objects = []
        self.ids = {}

    def technique(self, tid, name=None, data_sources=None, tactics=(), **extra):
        obj = {
            "type": "attack-pattern",
            "id": stix_id("attack-pattern", tid),
            "name": name or f"Technique {tid}",
            "external_references": [{"source_name": "mitre-attack", "external_id": tid}],
            "kill_chain_phases": [{"kill_chain_name": "mitre-attack", "phase_name": t} for t in tactics],
        }
        if data_sources is not None:
            obj["x_mitre_data_sources"] = list(data_sources)
        obj.update(extra)
        self.objects.append(obj)
        self.ids[tid] = obj["id"]
        return self

    def entity(self, eid, name=None, kind=None, **extra):
        kind = kind or {"G": "intrusion-set", "S": "malware", "C": "campaign"}[eid[0]]
        obj = {
            "type": kind,
            "id": stix_id(kind, eid),
            "name": name or f"Entity {eid}",
            "external_references": [{"source_name": "mitre-attack", "external_id": eid}],
        }
        obj.update(extra)
        self.objects.append(obj)
        self.ids[eid] = obj["id"]
        return self

    def uses(self, src, *targets, rtype="uses"):
        for dst in targets:
            self.objects.append(
                {
                    "type": "relationship",
                    "id": stix_id("relationship", f"{src}>{rtype}>{dst}"),
                    "relationship_type": rtype,
                    "source_ref": self.ids[src],
                    "target_ref": self.ids[dst],
                }
            )
        return self

    def text(self):
        return json.dumps({"type": "bundle", "id": "bundle--test", "objects": self.objects})


@pytest.fixture
def bundle():
    return BundleBuilder()


def make_technique(tid="T1570", data_sources=(), matrices=(Matrix.ENTERPRISE,), **kw):
    return TechniqueRecord(
        attack_id=tid,
        name=kw.pop("name", f"Technique {tid}"),
        matrices=frozenset(matrices),
        data_sources=tuple(data_sources),
        **kw,
    )


class FakeService:
    """Stands in for the model endpoint; answers every TECHNIQUE block it sees."""

    ANSWERS = ("yes", "no", "unknown")

    def __init__(self, fail_times=0, reply=None):
        self.calls = []
        self.fail_times = fail_times
        self.reply = reply

    def answer_for(self, tid):
        digits = int("".join(c for c in tid if c.isdigit()))
        return [self.ANSWERS[(digits + q) % 3] for q in range(5)]

    def __call__(self, url, headers, body, timeout):
        from nidsgap.errors import ServiceUnavailable

        self.calls.append({"url": url, "headers": headers, "body": body})
        if len(self.calls) <= self.fail_times:
            raise ServiceUnavailable("fake outage")
        prompt = body.get("prompt") or body["messages"][0]["content"]
        if self.reply is not None:
            return {"text": self.reply}
        ids = [ln.split()[1] for ln in prompt.splitlines() if ln.startswith("TECHNIQUE T")]
        blocks = []
        for tid in ids:
            qs = self.answer_for(tid)
            blocks.append("\n".join([f"TECHNIQUE {tid}"] + [f"Q{i}: {a}" for i, a in enumerate(qs, 1)]))
        return {"text": "\n\n".join(blocks)}


def twelve_techniques():
    return [make_technique(f"T{1000 + i}", name=f"Technique number {i}") for i in range(12)]


# one summary line per acceptance criterion, whatever the outcome
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _ACCEPTANCE[number] = (title, status)
    elif rep.failed:
        _ACCEPTANCE[number] = (title, "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status:4}  {title}")
