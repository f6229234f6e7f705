"""Phase runners that read and write the JSON artifacts in the output directory.

Artifact layout (all under ``output_dir``)::

    graph.json              ingest   merged technique/entity graph
    occurrences.json        extract  technique -> entities using it
    risk.json               score    ranked risk profiles
    candidates.json         score    technique records in ranked order
    detectability.json      detect   per-technique class + counts
    techniques.json         detect   network-detectable technique records
    assessments/index.json  assess   ordered list of assessor output files
    assessments/*.json      assess   one record set per assessor
    coverage_matrix.json    assess   reconciled labels
    report.json, report.md, coverage_matrix.csv, agreement.csv, charts/  report

Each phase only reads its predecessors' files, so any of them can be
replaced by hand before re-running the later phases.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import __version__
from .coverage import (
    DEFAULT_RULES,
    RULES_ASSESSOR_ID,
    AssessmentRecord,
    CoverageLabel,
    LabelThresholds,
    ModelServiceConfig,
    RemoteAssessor,
    assess_rule_based,
    template_hash,
)
from .dataset_kb import load_profiles
from .detectability import classify_technique, filter_network_detectable, load_keywords, summarize
from .errors import AuditorError, SchemaViolation
from .report import CoverageMatrix, analyze, build_matrix, emit_report
from .risk_scoring import COMBINER_FORMULAS, RiskProfile, load_base_risk, rank_techniques
from .stix_ingest import Matrix, StixObjectGraph, TechniqueRecord, load_bundle, merge_matrices
from .threat_model import OccurrenceMap, build_occurrence_map, load_selection

log = logging.getLogger(__name__)

ASSESSORS = ("rules", "remote", "both")


class PhaseError(AuditorError):
    """Wraps a failure with the phase it happened in."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(f"[{phase}] {cause}")
        self.phase = phase
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)


@dataclass
class PipelineConfig:
    enterprise_bundle: str | None = None
    ics_bundle: str | None = None
    entities: str | None = None
    strict_entities: bool = False
    base_risk: str | None = None
    risk_combiner: str = "default"
    keywords: str | None = None
    include_partial: bool = True
    kb: str | None = None
    assessor: str = "rules"
    remote: list[ModelServiceConfig] = field(default_factory=list)
    output_dir: str = "auditor-out"
    label_thresholds: LabelThresholds = field(default_factory=LabelThresholds)
    coverage_threshold: CoverageLabel = CoverageLabel.PARTIAL
    charts: bool = True
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        if self.assessor not in ASSESSORS:
            raise SchemaViolation(f"assessor must be one of {ASSESSORS}, got {self.assessor!r}")

    def path(self, value: str | None) -> Path | None:
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    def fingerprint(self) -> dict[str, Any]:
        """Settings that affect results. Output and cache locations are left out."""
        return {
            "bundles": {"enterprise": self.enterprise_bundle, "ics": self.ics_bundle},
            "entities": self.entities,
            "strict_entities": self.strict_entities,
            "base_risk": self.base_risk,
            "risk_combiner": self.risk_combiner,
            "keywords": self.keywords,
            "include_partial": self.include_partial,
            "kb": self.kb,
            "assessor": self.assessor,
            "remote": [
                {k: v for k, v in svc.to_dict().items() if k not in ("cache_dir", "api_key_env")}
                for svc in self.remote
            ],
            "label_thresholds": self.label_thresholds.to_dict(),
            "coverage_threshold": self.coverage_threshold.value,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.fingerprint(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: Path | None = None) -> "PipelineConfig":
        bundles = d.get("bundles", {})
        thresholds = d.get("thresholds", {})
        try:
            return cls(
                enterprise_bundle=bundles.get("enterprise"),
                ics_bundle=bundles.get("ics"),
                entities=d.get("entities"),
                strict_entities=bool(d.get("strict_entities", False)),
                base_risk=d.get("base_risk"),
                risk_combiner=d.get("risk_combiner", "default"),
                keywords=d.get("keywords"),
                include_partial=bool(d.get("include_partial", True)),
                kb=d.get("kb"),
                assessor=d.get("assessor", "rules"),
                remote=[ModelServiceConfig.from_dict(s) for s in d.get("remote", [])],
                output_dir=d.get("output_dir", "auditor-out"),
                label_thresholds=LabelThresholds.from_dict(thresholds.get("label", {})),
                coverage_threshold=CoverageLabel(thresholds.get("combination", "Partial")),
                charts=bool(d.get("charts", True)),
                base_dir=base_dir or Path.cwd(),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad config: {exc}") from None

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data, base_dir=path.resolve().parent)


def write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _digest(path: Path | None) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _phase(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PhaseError:
                raise
            except (AuditorError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
                raise PhaseError(name, exc) from exc

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


@_phase("ingest")
def ingest(cfg: PipelineConfig) -> StixObjectGraph:
    paths = [(cfg.path(cfg.enterprise_bundle), Matrix.ENTERPRISE), (cfg.path(cfg.ics_bundle), Matrix.ICS)]
    paths = [(p, m) for p, m in paths if p is not None]
    if not paths:
        raise SchemaViolation("no bundle configured (bundles.enterprise / bundles.ics)")
    graphs = [load_bundle(p, m) for p, m in paths]
    graph = graphs[0] if len(graphs) == 1 else merge_matrices(graphs[0], graphs[1])
    write_json(cfg.out / "graph.json", graph.to_dict())
    log.info("ingest: %d techniques, %d entities", len(graph.techniques), len(graph.entities))
    return graph


@_phase("extract")
def extract(cfg: PipelineConfig) -> OccurrenceMap:
    graph = StixObjectGraph.from_dict(read_json(cfg.out / "graph.json"))
    selection = load_selection(cfg.path(cfg.entities))
    occ = build_occurrence_map(graph, selection, strict=cfg.strict_entities)
    write_json(cfg.out / "occurrences.json", occ.to_dict())
    log.info("extract: %d unique techniques from %d entities", len(occ), len(selection.entity_ids))
    return occ


@_phase("score")
def score(cfg: PipelineConfig) -> list[RiskProfile]:
    graph = StixObjectGraph.from_dict(read_json(cfg.out / "graph.json"))
    occ = OccurrenceMap.from_dict(read_json(cfg.out / "occurrences.json"))
    ranked = rank_techniques(occ, load_base_risk(cfg.path(cfg.base_risk)), cfg.risk_combiner)
    write_json(cfg.out / "risk.json", [p.to_dict() for p in ranked])
    write_json(cfg.out / "candidates.json", [graph.techniques[p.attack_id].to_dict() for p in ranked])
    return ranked


@_phase("detect")
def detect(cfg: PipelineConfig, techniques_path: Path | None = None) -> list[TechniqueRecord]:
    source = techniques_path or cfg.out / "candidates.json"
    records = [TechniqueRecord.from_dict(d) for d in read_json(source)]
    keywords = load_keywords(cfg.path(cfg.keywords))
    kept = filter_network_detectable(records, keywords, cfg.include_partial)
    write_json(
        cfg.out / "detectability.json",
        {
            "include_partial": cfg.include_partial,
            "keywords": keywords.to_dict(),
            "counts": summarize(records, keywords),
            "total": len(records),
            "kept": len(kept),
            "classes": {r.attack_id: classify_technique(r, keywords).value for r in records},
        },
    )
    write_json(cfg.out / "techniques.json", [r.to_dict() for r in kept])
    return kept


def _assessor_file(assessor_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", assessor_id) + ".json"


@_phase("assess")
def assess(
    cfg: PipelineConfig,
    techniques_path: Path | None = None,
    transport=None,
) -> tuple[CoverageMatrix, list[list[AssessmentRecord]]]:
    """Run the configured assessors and reconcile them into a coverage matrix.

    ``transport`` replaces the HTTP sender for every remote service (tests).
    """
    techniques = [TechniqueRecord.from_dict(d) for d in read_json(techniques_path or cfg.out / "techniques.json")]
    kb = load_profiles(cfg.path(cfg.kb))
    rules = replace(DEFAULT_RULES, thresholds=cfg.label_thresholds)

    sets: list[tuple[str, list[AssessmentRecord]]] = []
    if cfg.assessor in ("rules", "both"):
        sets.append((RULES_ASSESSOR_ID, [assess_rule_based(t, p, rules) for p in kb.profiles for t in techniques]))
    if cfg.assessor in ("remote", "both"):
        if not cfg.remote:
            raise SchemaViolation("remote assessor selected but no remote service configured")
        for svc in cfg.remote:
            svc = replace(svc, cache_dir=str(cfg.path(svc.cache_dir)))
            kwargs = {"transport": transport} if transport is not None else {}
            client = RemoteAssessor(svc, thresholds=cfg.label_thresholds, **kwargs)
            records = [r for p in kb.profiles for r in client.assess(techniques, p)]
            sets.append((svc.assessor_id, records))

    index = []
    for assessor_id, records in sets:
        name = _assessor_file(assessor_id)
        write_json(cfg.out / "assessments" / name, [r.to_dict() for r in records])
        index.append({"assessor_id": assessor_id, "file": name})
    write_json(cfg.out / "assessments" / "index.json", index)

    matrix = build_matrix([r for _, r in sets], [t.attack_id for t in techniques], kb.names)
    write_json(cfg.out / "coverage_matrix.json", matrix.to_dict())
    return matrix, [r for _, r in sets]


def unassessed_count(cfg: PipelineConfig) -> int:
    index_path = cfg.out / "assessments" / "index.json"
    if not index_path.exists():
        return 0
    total = 0
    for entry in read_json(index_path):
        total += sum("unassessed" in r.get("flags", ()) for r in read_json(cfg.out / "assessments" / entry["file"]))
    return total


def _metadata(cfg: PipelineConfig, assessor_ids: list[str]) -> dict[str, Any]:
    out = cfg.out
    meta: dict[str, Any] = {
        "tool_version": __version__,
        "config_hash": cfg.config_hash(),
        "assessors": assessor_ids,
        "risk_combiner": f"{cfg.risk_combiner}: {COMBINER_FORMULAS.get(cfg.risk_combiner, '?')} (toolkit convention)",
        "include_partial": cfg.include_partial,
        "label_thresholds": cfg.label_thresholds.to_dict(),
        "coverage_threshold": f"{cfg.coverage_threshold.value} or better (inferred default)",
        "campaign_handling": "direct uses edges only; group attribution not followed",
        "inputs": {
            name: _digest(cfg.path(p))
            for name, p in [
                ("enterprise_bundle", cfg.enterprise_bundle),
                ("ics_bundle", cfg.ics_bundle),
                ("entities", cfg.entities),
                ("base_risk", cfg.base_risk),
                ("keywords", cfg.keywords),
                ("kb", cfg.kb),
            ]
            if p is not None and cfg.path(p).exists()
        },
    }
    if any(a.startswith("remote/") for a in assessor_ids):
        meta["prompt_template_hash"] = template_hash()
    if RULES_ASSESSOR_ID in assessor_ids:
        meta["rules_config_hash"] = replace(DEFAULT_RULES, thresholds=cfg.label_thresholds).content_hash()
    if (out / "graph.json").exists():
        meta["bundles"] = read_json(out / "graph.json").get("metadata", {})
    if (out / "occurrences.json").exists():
        meta["extracted_techniques"] = len(read_json(out / "occurrences.json"))
    if (out / "detectability.json").exists():
        det = read_json(out / "detectability.json")
        meta["detectability"] = {"counts": det["counts"], "kept": det["kept"], "total": det["total"]}
    try:
        kb = load_profiles(cfg.path(cfg.kb))
        meta["dataset_limitations"] = {p.name: list(p.limitations) for p in kb.profiles}
    except (AuditorError, OSError):
        pass
    return meta


@_phase("report")
def report(cfg: PipelineConfig, matrix_path: Path | None = None):
    """Recompute every analytic from persisted files and write the report."""
    out = cfg.out
    matrix = CoverageMatrix.from_dict(read_json(matrix_path or out / "coverage_matrix.json"))

    sets, assessor_ids = [], []
    index_path = out / "assessments" / "index.json"
    if index_path.exists():
        for entry in read_json(index_path):
            assessor_ids.append(entry["assessor_id"])
            sets.append([AssessmentRecord.from_dict(r) for r in read_json(out / "assessments" / entry["file"])])
    risk = None
    if (out / "risk.json").exists():
        risk = {p["attack_id"]: p["weighted_risk"] for p in read_json(out / "risk.json")}

    analysis = analyze(matrix, sets if len(sets) >= 2 else (), risk, cfg.coverage_threshold)
    emit_report(out, analysis, _metadata(cfg, assessor_ids), charts=cfg.charts)
    return analysis


def run_pipeline(cfg: PipelineConfig, transport=None):
    ingest(cfg)
    extract(cfg)
    score(cfg)
    detect(cfg)
    assess(cfg, transport=transport)
    return report(cfg)
