import json
import shutil
import socket

import pytest

from nidsgap import pipeline
from nidsgap.cli import main
from nidsgap.coverage.remote import ModelServiceConfig, RemoteAssessor
from nidsgap.dataset_kb import load_profiles
from nidsgap.pipeline import PipelineConfig
from nidsgap.stix_ingest import TechniqueRecord

from conftest import SMOKE, FakeService


@pytest.fixture
def smoke(tmp_path):
    work = tmp_path / "smoke"
    shutil.copytree(SMOKE, work)
    return work


@pytest.fixture
def no_network(monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse)


def run(smoke, *args):
    return main([*args, "--config", str(smoke / "config.json")])


def load(path):
    return json.loads(path.read_text())


def test_smoke_run_writes_every_artifact(smoke, no_network):
    assert run(smoke, "run") == 0
    out = smoke / "out"
    for name in (
        "graph.json",
        "occurrences.json",
        "risk.json",
        "candidates.json",
        "detectability.json",
        "techniques.json",
        "assessments/index.json",
        "coverage_matrix.json",
        "report.json",
        "report.md",
        "coverage_matrix.csv",
        "agreement.csv",
        "charts/mean_coverage.svg",
    ):
        assert (out / name).exists(), name
    det = load(out / "detectability.json")
    assert det["counts"] == {"Network": 2, "HostPhysical": 1, "Partial": 6, "Unclassified": 1}
    assert len(load(out / "techniques.json")) == 8
    assert len(load(out / "occurrences.json")) == 10
    meta = load(out / "report.json")["metadata"]
    assert meta["assessors"] == ["rules/v1"]
    assert "rules_config_hash" in meta and meta["config_hash"]


def test_run_twice_is_byte_identical(smoke, tmp_path):
    assert run(smoke, "run") == 0
    first = (smoke / "out" / "report.json").read_bytes()
    assert run(smoke, "run", "--output", str(tmp_path / "second")) == 0
    assert (tmp_path / "second" / "report.json").read_bytes() == first


def test_report_only_rerun_matches(smoke):
    assert run(smoke, "run") == 0
    first = (smoke / "out" / "report.json").read_bytes()
    (smoke / "out" / "report.json").unlink()
    assert run(smoke, "report") == 0
    assert (smoke / "out" / "report.json").read_bytes() == first


def test_phases_one_by_one_match_run(smoke, tmp_path):
    assert run(smoke, "run") == 0
    step = str(tmp_path / "step")
    for phase in ("ingest", "extract", "score", "detect", "assess", "report"):
        assert run(smoke, phase, "--output", step) == 0, phase
    assert (tmp_path / "step" / "report.json").read_bytes() == (smoke / "out" / "report.json").read_bytes()


def test_missing_bundle_is_a_data_error(smoke, capsys):
    (smoke / "ics.json").unlink()
    assert run(smoke, "run") == 2
    assert "[ingest]" in capsys.readouterr().err


def test_missing_intermediate_names_the_phase(smoke, capsys):
    assert run(smoke, "extract") == 2
    assert "[extract]" in capsys.readouterr().err


def test_usage_errors_exit_one(smoke, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run(smoke, "detect", "--include-partial", "maybe")
    assert exc.value.code == 1
    assert main(["run", "--config", str(smoke / "missing.json")]) == 1


def test_unknown_combiner_exit_one(smoke):
    assert run(smoke, "ingest") == 0
    assert run(smoke, "extract") == 0
    assert run(smoke, "score", "--risk-combiner", "nope") == 1


def test_detect_accepts_handmade_technique_list(smoke, tmp_path):
    techniques = [
        TechniqueRecord.from_dict(d).to_dict()
        for d in [
            {"attack_id": "T0855", "name": "Unauthorized Command Message", "matrices": ["ICS"],
             "data_sources": ["Network Traffic: Network Traffic Content"]},
            {"attack_id": "T1059", "name": "Command and Scripting Interpreter", "matrices": ["Enterprise"],
             "data_sources": ["Process: Process Creation"]},
        ]
    ]
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(techniques))
    assert run(smoke, "detect", "--techniques", str(path)) == 0
    kept = load(smoke / "out" / "techniques.json")
    assert [t["attack_id"] for t in kept] == ["T0855"]


def test_include_partial_flag(smoke):
    for phase in ("ingest", "extract", "score"):
        assert run(smoke, phase) == 0
    assert run(smoke, "detect", "--include-partial", "false") == 0
    assert len(load(smoke / "out" / "techniques.json")) == 2


def test_edited_matrix_is_reported(smoke):
    assert run(smoke, "run") == 0
    matrix = load(smoke / "out" / "coverage_matrix.json")
    for row in matrix["cells"].values():
        for d in row:
            row[d] = "Full"
    edited = smoke / "edited.json"
    edited.write_text(json.dumps(matrix))
    assert run(smoke, "report", "--matrix", str(edited)) == 0
    stats = load(smoke / "out" / "report.json")["analysis"]["dataset_stats"]
    assert all(s["mean_score"] == 1.0 for s in stats.values())


def _remote_config(smoke, port_endpoint, **svc):
    cfg = load(smoke / "config.json")
    cfg["assessor"] = "remote"
    cfg["remote"] = [{"endpoint": port_endpoint, "model_name": "fake-model", "cache_dir": "cache", **svc}]
    (smoke / "config.json").write_text(json.dumps(cfg))
    return PipelineConfig.load(smoke / "config.json")


def test_remote_failure_exits_three_after_writing(smoke, capsys):
    _remote_config(smoke, "http://127.0.0.1:9/v1", max_retries=0, timeout=2)
    assert run(smoke, "run") == 3
    assert "unassessed" in capsys.readouterr().err
    assert (smoke / "out" / "report.json").exists()


def test_remote_replay_from_warm_cache_is_offline(smoke, no_network):
    cfg = _remote_config(smoke, "http://model.invalid/v1")
    service = FakeService()
    pipeline.run_pipeline(cfg, transport=service)
    assert service.calls
    first = load(smoke / "out" / "assessments" / "remote_fake-model.json")
    assert run(smoke, "assess", "--assessor", "remote") == 0
    assert load(smoke / "out" / "assessments" / "remote_fake-model.json") == first


def test_cache_flag_overrides_config(smoke, tmp_path):
    cfg = _remote_config(smoke, "http://model.invalid/v1")
    svc = ModelServiceConfig("http://model.invalid/v1", "fake-model", cache_dir=str(tmp_path / "elsewhere"))
    for phase in ("ingest", "extract", "score", "detect"):
        assert run(smoke, phase) == 0
    recs = [TechniqueRecord.from_dict(d) for d in load(smoke / "out" / "techniques.json")]
    for p in load_profiles(cfg.path(cfg.kb)).profiles:
        RemoteAssessor(svc, transport=FakeService()).assess(recs, p)
    assert not (smoke / "cache").exists()
    # every pair is already cached elsewhere, so nothing reaches the unreachable endpoint
    assert run(smoke, "assess", "--cache", str(tmp_path / "elsewhere")) == 0
    assert not (smoke / "cache").exists()
