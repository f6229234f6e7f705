"""Technique extraction for a configured set of threat entities."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Iterable

from .errors import SchemaViolation, UnknownEntity
from .stix_ingest import ENTITY_ID_RE, StixObjectGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntitySelection:
    entity_ids: tuple[str, ...]

    def __post_init__(self):
        bad = [e for e in self.entity_ids if not isinstance(e, str) or not ENTITY_ID_RE.match(e)]
        if bad:
            raise SchemaViolation(f"invalid entity ids: {bad}")
        if len(set(self.entity_ids)) != len(self.entity_ids):
            raise SchemaViolation("duplicate entity ids in selection")

    @classmethod
    def of(cls, ids: Iterable[str]) -> "EntitySelection":
        return cls(tuple(ids))


def load_selection(path=None) -> EntitySelection:
    """Read a JSON array of entity ids; ``None`` gives the shipped energy-sector list."""
    if path is None:
        text = resources.files("nidsgap.data").joinpath("energy_entities.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    data = json.loads(text)
    if not isinstance(data, list):
        raise SchemaViolation("entity selection file must be a JSON array of ids")
    return EntitySelection.of(data)


@dataclass(frozen=True)
class OccurrenceMap:
    """technique id -> ids of the selected entities that use it."""

    users: dict[str, frozenset[str]] = field(default_factory=dict)

    def occurrence_count(self, attack_id: str) -> int:
        return len(self.users.get(attack_id, ()))

    def __len__(self) -> int:
        return len(self.users)

    def __contains__(self, attack_id: str) -> bool:
        return attack_id in self.users

    def counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in sorted(self.users.items())}

    def to_dict(self) -> dict[str, Any]:
        return {
            k: {"entities": sorted(v), "occurrence_count": len(v)}
            for k, v in sorted(self.users.items())
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "OccurrenceMap":
        return cls({k: frozenset(v["entities"]) for k, v in d.items()})


def extract_entity_techniques(graph: StixObjectGraph, entity_id: str) -> set[str]:
    """Techniques reachable from ``entity_id`` by a single "uses" edge."""
    if entity_id not in graph.entities:
        raise UnknownEntity(f"entity {entity_id} not present in graph")
    sources = set(graph.stix_ids_for(entity_id))
    found = set()
    for src, dst in graph.uses_edges:
        if src in sources:
            target = graph.stix_index.get(dst)
            if target in graph.techniques:
                found.add(target)
    return found


def build_occurrence_map(
    graph: StixObjectGraph, selection: EntitySelection, strict: bool = True
) -> OccurrenceMap:
    # campaign -> group attribution is deliberately not followed
    users: dict[str, set[str]] = {}
    for entity_id in selection.entity_ids:
        try:
            techniques = extract_entity_techniques(graph, entity_id)
        except UnknownEntity:
            if strict:
                raise
            log.warning("skipping unknown entity %s", entity_id)
            continue
        for tid in techniques:
            users.setdefault(tid, set()).add(entity_id)
    return OccurrenceMap({k: frozenset(v) for k, v in sorted(users.items())})
