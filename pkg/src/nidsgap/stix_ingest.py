"""Parse ATT&CK STIX 2.1 bundles into a small queryable graph.

Only the object kinds the pipeline needs are retained: attack-patterns
(techniques), intrusion-sets / malware / tools / campaigns (threat entities)
and relationships. Revoked and deprecated objects are dropped up front.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from .errors import MalformedBundle

log = logging.getLogger(__name__)

TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(\.\d{3})?$")
ENTITY_ID_RE = re.compile(r"^[GSC]\d{4}$")

ATTACK_SOURCE_NAMES = ("mitre-attack", "mitre-ics-attack")
KEPT_TYPES = frozenset(
    {"attack-pattern", "intrusion-set", "malware", "tool", "campaign", "relationship"}
)


class Matrix(str, Enum):
    ENTERPRISE = "Enterprise"
    ICS = "ICS"


class EntityKind(str, Enum):
    GROUP = "Group"
    SOFTWARE = "Software"
    CAMPAIGN = "Campaign"


_KIND_BY_STIX_TYPE = {
    "intrusion-set": EntityKind.GROUP,
    "malware": EntityKind.SOFTWARE,
    "tool": EntityKind.SOFTWARE,
    "campaign": EntityKind.CAMPAIGN,
}
_KIND_BY_PREFIX = {"G": EntityKind.GROUP, "S": EntityKind.SOFTWARE, "C": EntityKind.CAMPAIGN}


@dataclass(frozen=True)
class TechniqueRecord:
    attack_id: str
    name: str
    matrices: frozenset[Matrix]
    data_sources: tuple[str, ...] = ()
    is_subtechnique: bool = False
    description: str = ""
    tactics: tuple[str, ...] = ()

    def __post_init__(self):
        if not TECHNIQUE_ID_RE.match(self.attack_id):
            raise ValueError(f"not a technique id: {self.attack_id!r}")
        if not self.matrices:
            raise ValueError(f"{self.attack_id}: matrices must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "attack_id": self.attack_id,
            "name": self.name,
            "matrices": sorted(m.value for m in self.matrices),
            "data_sources": list(self.data_sources),
            "is_subtechnique": self.is_subtechnique,
            "description": self.description,
            "tactics": list(self.tactics),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TechniqueRecord":
        return cls(
            attack_id=d["attack_id"],
            name=d.get("name", ""),
            matrices=frozenset(Matrix(m) for m in d["matrices"]),
            data_sources=tuple(d.get("data_sources", ())),
            is_subtechnique=bool(d.get("is_subtechnique", "." in d["attack_id"])),
            description=d.get("description", ""),
            tactics=tuple(d.get("tactics", ())),
        )


@dataclass(frozen=True)
class ThreatEntity:
    attack_id: str
    kind: EntityKind
    name: str

    def __post_init__(self):
        if not ENTITY_ID_RE.match(self.attack_id):
            raise ValueError(f"not an entity id: {self.attack_id!r}")
        if _KIND_BY_PREFIX[self.attack_id[0]] is not self.kind:
            raise ValueError(f"{self.attack_id}: prefix inconsistent with kind {self.kind.value}")

    def to_dict(self) -> dict[str, Any]:
        return {"attack_id": self.attack_id, "kind": self.kind.value, "name": self.name}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ThreatEntity":
        return cls(d["attack_id"], EntityKind(d["kind"]), d.get("name", ""))


@dataclass(frozen=True)
class StixObjectGraph:
    """Immutable result of parsing (and possibly merging) bundles.

    ``stix_index`` maps every retained technique/entity STIX id to its ATT&CK
    external id, which is how ``uses_edges`` are resolved.
    """

    objects: dict[str, dict[str, Any]] = field(default_factory=dict)
    techniques: dict[str, TechniqueRecord] = field(default_factory=dict)
    entities: dict[str, ThreatEntity] = field(default_factory=dict)
    uses_edges: tuple[tuple[str, str], ...] = ()
    stix_index: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, dict[str, Any]] = field(default_factory=dict)

    def stix_ids_for(self, attack_id: str) -> list[str]:
        return sorted(s for s, a in self.stix_index.items() if a == attack_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "metadata": self.metadata,
            "techniques": [self.techniques[k].to_dict() for k in sorted(self.techniques)],
            "entities": [self.entities[k].to_dict() for k in sorted(self.entities)],
            "uses_edges": [list(e) for e in self.uses_edges],
            "stix_index": dict(sorted(self.stix_index.items())),
            "objects": dict(sorted(self.objects.items())),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StixObjectGraph":
        techniques = [TechniqueRecord.from_dict(t) for t in d.get("techniques", [])]
        entities = [ThreatEntity.from_dict(e) for e in d.get("entities", [])]
        return cls(
            objects=dict(d.get("objects", {})),
            techniques={t.attack_id: t for t in techniques},
            entities={e.attack_id: e for e in entities},
            uses_edges=tuple((s, t) for s, t in d.get("uses_edges", [])),
            stix_index=dict(d.get("stix_index", {})),
            metadata=dict(d.get("metadata", {})),
        )


def _attack_external_id(obj: dict[str, Any]) -> str | None:
    for ref in obj.get("external_references", ()) or ():
        if ref.get("source_name") in ATTACK_SOURCE_NAMES and ref.get("external_id"):
            return ref["external_id"]
    return None


def _is_retired(obj: dict[str, Any]) -> bool:
    return bool(obj.get("revoked")) or bool(obj.get("x_mitre_deprecated"))


def _tactics(obj: dict[str, Any]) -> tuple[str, ...]:
    phases = obj.get("kill_chain_phases") or ()
    names = {p["phase_name"] for p in phases if p.get("kill_chain_name") in ATTACK_SOURCE_NAMES}
    return tuple(sorted(names))


def _bundle_metadata(objects: list[dict[str, Any]], matrix: Matrix) -> dict[str, Any]:
    meta: dict[str, Any] = {"matrix": matrix.value}
    modified = [o["modified"] for o in objects if isinstance(o.get("modified"), str)]
    if modified:
        meta["latest_modified"] = max(modified)
    for o in objects:
        if o.get("type") == "x-mitre-collection":
            meta["collection"] = o.get("name")
            meta["x_mitre_version"] = o.get("x_mitre_version")
            break
    return meta


def parse_bundle(raw_json_text: str | bytes, matrix_tag: Matrix | str) -> StixObjectGraph:
    """Parse one bundle. Every technique is tagged with ``matrix_tag``.

    Attack-patterns without a usable ATT&CK external id are skipped with a
    warning rather than failing the whole bundle.
    """
    matrix = Matrix(matrix_tag)
    try:
        bundle = json.loads(raw_json_text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedBundle(f"bundle is not valid JSON: {exc}") from exc
    if not isinstance(bundle, dict) or not isinstance(bundle.get("objects"), list):
        raise MalformedBundle('bundle has no top-level "objects" array')

    all_objects = [o for o in bundle["objects"] if isinstance(o, dict)]
    objects: dict[str, dict[str, Any]] = {}
    techniques: dict[str, TechniqueRecord] = {}
    entities: dict[str, ThreatEntity] = {}
    stix_index: dict[str, str] = {}
    relationships: list[dict[str, Any]] = []

    for obj in all_objects:
        kind = obj.get("type")
        if kind not in KEPT_TYPES or _is_retired(obj) or "id" not in obj:
            continue
        if kind == "relationship":
            objects[obj["id"]] = obj
            relationships.append(obj)
            continue

        ext_id = _attack_external_id(obj)
        if kind == "attack-pattern":
            if ext_id is None or not TECHNIQUE_ID_RE.match(ext_id):
                log.warning("MissingExternalId: skipping attack-pattern %s", obj["id"])
                continue
            rec = TechniqueRecord(
                attack_id=ext_id,
                name=obj.get("name", ""),
                matrices=frozenset({matrix}),
                data_sources=tuple(obj.get("x_mitre_data_sources") or ()),
                is_subtechnique=bool(obj.get("x_mitre_is_subtechnique", "." in ext_id)),
                description=obj.get("description", ""),
                tactics=_tactics(obj),
            )
            if ext_id in techniques:
                log.warning("duplicate technique %s in one bundle; keeping first", ext_id)
            else:
                techniques[ext_id] = rec
        else:
            expected = _KIND_BY_STIX_TYPE[kind]
            if ext_id is None or not ENTITY_ID_RE.match(ext_id):
                log.warning("MissingExternalId: skipping %s %s", kind, obj["id"])
                continue
            if _KIND_BY_PREFIX[ext_id[0]] is not expected:
                log.warning("skipping %s: id prefix does not match STIX type %s", ext_id, kind)
                continue
            entities.setdefault(ext_id, ThreatEntity(ext_id, expected, obj.get("name", "")))
        objects[obj["id"]] = obj
        stix_index[obj["id"]] = ext_id

    edges: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for rel in relationships:
        if rel.get("relationship_type") != "uses":
            continue
        edge = (rel.get("source_ref"), rel.get("target_ref"))
        if edge[0] in objects and edge[1] in objects and edge not in seen:
            seen.add(edge)
            edges.append(edge)

    return StixObjectGraph(
        objects=objects,
        techniques=techniques,
        entities=entities,
        uses_edges=tuple(edges),
        stix_index=stix_index,
        metadata={matrix.value: _bundle_metadata(all_objects, matrix)},
    )


def _union_ordered(*seqs: Iterable[str]) -> tuple[str, ...]:
    out: dict[str, None] = {}
    for seq in seqs:
        for item in seq:
            out.setdefault(item, None)
    return tuple(out)


def _merge_technique(a: TechniqueRecord, b: TechniqueRecord) -> TechniqueRecord:
    # a is the Enterprise-side record; its name wins on conflict
    if a.name != b.name:
        log.warning("ConflictingNames: %s is %r vs %r; keeping %r", a.attack_id, a.name, b.name, a.name)
    return TechniqueRecord(
        attack_id=a.attack_id,
        name=a.name,
        matrices=a.matrices | b.matrices,
        data_sources=_union_ordered(a.data_sources, b.data_sources),
        is_subtechnique=a.is_subtechnique or b.is_subtechnique,
        description=a.description or b.description,
        tactics=tuple(sorted(set(a.tactics) | set(b.tactics))),
    )


def merge_matrices(enterprise: StixObjectGraph, ics: StixObjectGraph) -> StixObjectGraph:
    """Union two graphs, deduplicating techniques and entities by ATT&CK id."""
    techniques = dict(enterprise.techniques)
    for key, rec in ics.techniques.items():
        techniques[key] = _merge_technique(techniques[key], rec) if key in techniques else rec

    entities = dict(enterprise.entities)
    for key, ent in ics.entities.items():
        if key in entities and entities[key].name != ent.name:
            log.warning("ConflictingNames: entity %s is %r vs %r", key, entities[key].name, ent.name)
        entities.setdefault(key, ent)

    objects = dict(enterprise.objects)
    for key, obj in ics.objects.items():
        objects.setdefault(key, obj)

    stix_index = dict(enterprise.stix_index)
    for key, ext in ics.stix_index.items():
        stix_index.setdefault(key, ext)

    metadata = {**ics.metadata, **enterprise.metadata}
    return StixObjectGraph(
        objects=objects,
        techniques=techniques,
        entities=entities,
        uses_edges=tuple(dict.fromkeys(enterprise.uses_edges + ics.uses_edges)),
        stix_index=stix_index,
        metadata=metadata,
    )


def load_bundle(path, matrix_tag: Matrix | str) -> StixObjectGraph:
    with open(path, "rb") as fh:
        return parse_bundle(fh.read(), matrix_tag)
