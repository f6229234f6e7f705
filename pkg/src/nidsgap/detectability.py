"""Keyword-based network detectability classification of techniques."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Sequence

from .errors import SchemaViolation
from .stix_ingest import TechniqueRecord

log = logging.getLogger(__name__)


class DetectabilityClass(str, Enum):
    NETWORK = "Network"
    HOST_PHYSICAL = "HostPhysical"
    PARTIAL = "Partial"
    UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class KeywordConfig:
    network_keywords: tuple[str, ...]
    host_keywords: tuple[str, ...]
    case_sensitive: bool = False

    def __post_init__(self):
        if not self.network_keywords or not self.host_keywords:
            raise SchemaViolation("keyword lists must be non-empty")
        fold = (lambda s: s) if self.case_sensitive else str.casefold
        shared = {fold(k) for k in self.network_keywords} & {fold(k) for k in self.host_keywords}
        if shared:
            raise SchemaViolation(f"keywords in both lists: {sorted(shared)}")

    def to_dict(self) -> dict:
        return {
            "network_keywords": list(self.network_keywords),
            "host_keywords": list(self.host_keywords),
            "case_sensitive": self.case_sensitive,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KeywordConfig":
        try:
            return cls(
                tuple(d["network_keywords"]),
                tuple(d["host_keywords"]),
                bool(d.get("case_sensitive", False)),
            )
        except KeyError as exc:
            raise SchemaViolation(f"keyword config missing {exc}") from None


def load_keywords(path=None) -> KeywordConfig:
    if path is None:
        text = resources.files("nidsgap.data").joinpath("keywords.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return KeywordConfig.from_dict(json.loads(text))


DEFAULT_KEYWORDS = load_keywords()


def _matches(text: str, keywords: Iterable[str], case_sensitive: bool) -> bool:
    if case_sensitive:
        return any(k in text for k in keywords)
    text = text.casefold()
    return any(k.casefold() in text for k in keywords)


def classify_data_sources(data_sources: Sequence[str], config: KeywordConfig = DEFAULT_KEYWORDS) -> DetectabilityClass:
    network = any(_matches(ds, config.network_keywords, config.case_sensitive) for ds in data_sources)
    host = any(_matches(ds, config.host_keywords, config.case_sensitive) for ds in data_sources)
    if network and host:
        return DetectabilityClass.PARTIAL
    if network:
        return DetectabilityClass.NETWORK
    if host:
        return DetectabilityClass.HOST_PHYSICAL
    return DetectabilityClass.UNCLASSIFIED


def classify_technique(record: TechniqueRecord, config: KeywordConfig = DEFAULT_KEYWORDS) -> DetectabilityClass:
    return classify_data_sources(record.data_sources, config)


def summarize(records: Iterable[TechniqueRecord], config: KeywordConfig = DEFAULT_KEYWORDS) -> dict[str, int]:
    counts = Counter(classify_technique(r, config) for r in records)
    return {c.value: counts.get(c, 0) for c in DetectabilityClass}


def filter_network_detectable(
    records: Sequence[TechniqueRecord],
    config: KeywordConfig = DEFAULT_KEYWORDS,
    include_partial: bool = True,
) -> list[TechniqueRecord]:
    keep = {DetectabilityClass.NETWORK}
    if include_partial:
        keep.add(DetectabilityClass.PARTIAL)
    kept = [r for r in records if classify_technique(r, config) in keep]
    log.info(
        "detectability: kept %d of %d (%s)",
        len(kept),
        len(records),
        ", ".join(f"{k}={v}" for k, v in summarize(records, config).items()),
    )
    return kept
