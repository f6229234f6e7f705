"""Analytics over a reconciled technique x dataset coverage matrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from ..coverage.scoring import LABEL_ORDER, AssessmentRecord, CoverageLabel, reconcile_all
from ..errors import EmptyMatrix, KeyMismatch, UnknownDataset

EXHAUSTIVE_LIMIT = 12


@dataclass(frozen=True)
class CoverageMatrix:
    techniques: tuple[str, ...]
    datasets: tuple[str, ...]
    cells: Mapping[tuple[str, str], CoverageLabel]

    def __post_init__(self):
        if len(set(self.techniques)) != len(self.techniques):
            raise ValueError("duplicate technique rows")
        if len(set(self.datasets)) != len(self.datasets):
            raise ValueError("duplicate dataset columns")
        missing = [(t, d) for t in self.techniques for d in self.datasets if (t, d) not in self.cells]
        if missing:
            raise ValueError(f"{len(missing)} unpopulated cells, e.g. {missing[0]}")

    def cell(self, technique: str, dataset: str) -> CoverageLabel:
        return self.cells[(technique, dataset)]

    def numeric(self) -> np.ndarray:
        """(techniques, datasets) array of label values."""
        return np.array(
            [[self.cells[(t, d)].numeric_value for d in self.datasets] for t in self.techniques],
            dtype=float,
        ).reshape(len(self.techniques), len(self.datasets))

    def covered(self, threshold: CoverageLabel = CoverageLabel.PARTIAL) -> np.ndarray:
        return self.numeric() >= threshold.numeric_value

    def to_dict(self) -> dict[str, Any]:
        return {
            "techniques": list(self.techniques),
            "datasets": list(self.datasets),
            "cells": {t: {d: self.cells[(t, d)].value for d in self.datasets} for t in self.techniques},
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CoverageMatrix":
        techniques = tuple(d["techniques"])
        datasets = tuple(d["datasets"])
        cells = {(t, ds): CoverageLabel(d["cells"][t][ds]) for t in techniques for ds in datasets}
        return cls(techniques, datasets, cells)

    @classmethod
    def from_rows(cls, datasets: Sequence[str], rows: Mapping[str, Sequence[CoverageLabel | str]]):
        cells = {}
        for t, row in rows.items():
            if len(row) != len(datasets):
                raise ValueError(f"row {t} has {len(row)} cells, expected {len(datasets)}")
            for d, label in zip(datasets, row):
                cells[(t, d)] = CoverageLabel(label)
        return cls(tuple(rows), tuple(datasets), cells)


def build_matrix(
    record_sets: Iterable[Iterable[AssessmentRecord]],
    techniques: Sequence[str],
    datasets: Sequence[str],
) -> CoverageMatrix:
    """Reconcile any number of assessor outputs; unassessed pairs become Unknown."""
    seen: dict[tuple[str, str], list[CoverageLabel]] = {}
    for records in record_sets:
        for rec in records:
            seen.setdefault(rec.key, []).append(rec.label)
    cells = {
        (t, d): reconcile_all(seen[(t, d)]) if (t, d) in seen else CoverageLabel.UNKNOWN
        for t in techniques
        for d in datasets
    }
    return CoverageMatrix(tuple(techniques), tuple(datasets), cells)


@dataclass(frozen=True)
class DatasetStats:
    mean_score: float
    full_count: int
    full_fraction: float
    label_histogram: dict[str, int]

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_score": self.mean_score,
            "full_count": self.full_count,
            "full_fraction": self.full_fraction,
            "label_histogram": dict(self.label_histogram),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetStats":
        return cls(d["mean_score"], d["full_count"], d["full_fraction"], dict(d["label_histogram"]))


def dataset_stats(matrix: CoverageMatrix) -> dict[str, DatasetStats]:
    if not matrix.techniques or not matrix.datasets:
        raise EmptyMatrix("coverage matrix has no cells")
    n = len(matrix.techniques)
    out = {}
    for d in matrix.datasets:
        column = [matrix.cells[(t, d)] for t in matrix.techniques]
        histogram = {label.value: sum(c is label for c in column) for label in LABEL_ORDER}
        full = histogram[CoverageLabel.FULL.value]
        out[d] = DatasetStats(
            mean_score=math.fsum(c.numeric_value for c in column) / n,
            full_count=full,
            full_fraction=full / n,
            label_histogram=histogram,
        )
    return out


@dataclass(frozen=True)
class CombinationResult:
    subset: tuple[str, ...]
    covered_count: int
    coverage_fraction: float
    covered_ids: tuple[str, ...]
    uncovered_ids: tuple[str, ...]
    heuristic: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "subset": list(self.subset),
            "covered_count": self.covered_count,
            "coverage_fraction": self.coverage_fraction,
            "covered_ids": list(self.covered_ids),
            "uncovered_ids": list(self.uncovered_ids),
            "heuristic": self.heuristic,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CombinationResult":
        return cls(
            tuple(d["subset"]),
            d["covered_count"],
            d["coverage_fraction"],
            tuple(d["covered_ids"]),
            tuple(d["uncovered_ids"]),
            d.get("heuristic", False),
        )


def _combination(
    matrix: CoverageMatrix, covered: np.ndarray, columns: Sequence[int], heuristic: bool = False
) -> CombinationResult:
    hit = covered[:, list(columns)].any(axis=1)
    ids = np.array(matrix.techniques, dtype=object)
    n = len(matrix.techniques)
    return CombinationResult(
        subset=tuple(sorted(matrix.datasets[c] for c in columns)),
        covered_count=int(hit.sum()),
        coverage_fraction=int(hit.sum()) / n,
        covered_ids=tuple(ids[hit]),
        uncovered_ids=tuple(ids[~hit]),
        heuristic=heuristic,
    )


def _columns(matrix: CoverageMatrix, subset: Iterable[str]) -> list[int]:
    subset = list(subset)
    unknown = [s for s in subset if s not in matrix.datasets]
    if unknown:
        raise UnknownDataset(f"not in matrix: {unknown}")
    if not subset:
        raise ValueError("subset must be non-empty")
    return sorted({matrix.datasets.index(s) for s in subset})


def combination_coverage(
    matrix: CoverageMatrix,
    subset: Iterable[str],
    threshold: CoverageLabel = CoverageLabel.PARTIAL,
) -> CombinationResult:
    """A technique counts as covered if any dataset in ``subset`` reaches ``threshold``."""
    if not matrix.techniques:
        raise EmptyMatrix("coverage matrix has no techniques")
    return _combination(matrix, matrix.covered(threshold), _columns(matrix, subset))


def exhaustive_combination(
    matrix: CoverageMatrix, k: int, threshold: CoverageLabel = CoverageLabel.PARTIAL
) -> CombinationResult:
    if not 1 <= k <= len(matrix.datasets):
        raise ValueError(f"k must be in [1, {len(matrix.datasets)}]")
    if not matrix.techniques:
        raise EmptyMatrix("coverage matrix has no techniques")
    covered = matrix.covered(threshold)
    order = sorted(range(len(matrix.datasets)), key=lambda c: matrix.datasets[c])
    best_cols, best_count = None, -1
    # combinations over name-sorted columns arrive in lexicographic subset order,
    # so the first optimum seen is the tie-break winner
    for cols in itertools.combinations(order, k):
        count = int(covered[:, list(cols)].any(axis=1).sum())
        if count > best_count:
            best_cols, best_count = cols, count
    return _combination(matrix, covered, best_cols)


def greedy_combination(
    matrix: CoverageMatrix, k: int, threshold: CoverageLabel = CoverageLabel.PARTIAL
) -> CombinationResult:
    """Max-marginal-gain greedy; result is flagged heuristic."""
    if not 1 <= k <= len(matrix.datasets):
        raise ValueError(f"k must be in [1, {len(matrix.datasets)}]")
    if not matrix.techniques:
        raise EmptyMatrix("coverage matrix has no techniques")
    covered = matrix.covered(threshold)
    hit = np.zeros(len(matrix.techniques), dtype=bool)
    chosen: list[int] = []
    by_name = sorted(range(len(matrix.datasets)), key=lambda c: matrix.datasets[c])
    for _ in range(k):
        best, best_gain = None, -1
        for c in by_name:
            if c in chosen:
                continue
            gain = int((covered[:, c] & ~hit).sum())
            if gain > best_gain:
                best, best_gain = c, gain
        chosen.append(best)
        hit |= covered[:, best]
    return _combination(matrix, covered, chosen, heuristic=True)


def best_combination(
    matrix: CoverageMatrix,
    k: int,
    threshold: CoverageLabel = CoverageLabel.PARTIAL,
    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
) -> CombinationResult:
    if len(matrix.datasets) <= exhaustive_limit:
        return exhaustive_combination(matrix, k, threshold)
    return greedy_combination(matrix, k, threshold)


def ranked_combinations(
    matrix: CoverageMatrix, k: int, threshold: CoverageLabel = CoverageLabel.PARTIAL
) -> list[CombinationResult]:
    """Every size-k subset, best first (ties in lexicographic subset order)."""
    names = sorted(matrix.datasets)
    results = [combination_coverage(matrix, s, threshold) for s in itertools.combinations(names, k)]
    return sorted(results, key=lambda r: -r.covered_count)


@dataclass(frozen=True)
class TechniqueGaps:
    uncovered_everywhere: tuple[str, ...]
    minimal_coverage: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "uncovered_everywhere": list(self.uncovered_everywhere),
            "minimal_coverage": list(self.minimal_coverage),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TechniqueGaps":
        return cls(tuple(d["uncovered_everywhere"]), tuple(d["minimal_coverage"]))


def technique_gaps(matrix: CoverageMatrix) -> TechniqueGaps:
    """Rows with nothing above Unknown, and rows held up by a single Partial."""
    uncovered, minimal = [], []
    for t in matrix.techniques:
        row = [matrix.cells[(t, d)] for d in matrix.datasets]
        if max(row) <= CoverageLabel.UNKNOWN:
            uncovered.append(t)
        elif CoverageLabel.FULL not in row and row.count(CoverageLabel.PARTIAL) <= 1:
            minimal.append(t)
    return TechniqueGaps(tuple(uncovered), tuple(minimal))


@dataclass(frozen=True)
class AgreementMatrix:
    per_dataset: dict[str, float]
    overall_rate: float
    pair_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_dataset": dict(self.per_dataset),
            "overall_rate": self.overall_rate,
            "pair_counts": dict(self.pair_counts),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AgreementMatrix":
        return cls(dict(d["per_dataset"]), d["overall_rate"], dict(d.get("pair_counts", {})))


def agreement(
    records_a: Iterable[AssessmentRecord], records_b: Iterable[AssessmentRecord]
) -> AgreementMatrix:
    """Exact-label agreement per dataset and pooled over every pair."""
    a = {r.key: r.label for r in records_a}
    b = {r.key: r.label for r in records_b}
    if a.keys() != b.keys():
        diff = sorted(a.keys() ^ b.keys())
        raise KeyMismatch(f"assessment sets differ on {len(diff)} pairs, e.g. {diff[0]}")
    if not a:
        raise EmptyMatrix("no assessments to compare")
    datasets = list(dict.fromkeys(d for _, d in a))
    agree: dict[str, int] = {d: 0 for d in datasets}
    total: dict[str, int] = {d: 0 for d in datasets}
    for key, label in a.items():
        total[key[1]] += 1
        agree[key[1]] += label is b[key]
    return AgreementMatrix(
        per_dataset={d: agree[d] / total[d] for d in datasets},
        overall_rate=sum(agree.values()) / sum(total.values()),
        pair_counts=total,
    )


def dataset_overlap(
    matrix: CoverageMatrix, threshold: CoverageLabel = CoverageLabel.PARTIAL
) -> dict[str, dict[str, float]]:
    """Jaccard similarity of the covered-technique sets of each dataset pair."""
    covered = matrix.covered(threshold)
    out: dict[str, dict[str, float]] = {}
    for i, a in enumerate(matrix.datasets):
        out[a] = {}
        for j, b in enumerate(matrix.datasets):
            union = int((covered[:, i] | covered[:, j]).sum())
            both = int((covered[:, i] & covered[:, j]).sum())
            out[a][b] = both / union if union else 0.0
    return out


def risk_coverage_correlation(matrix: CoverageMatrix, weighted_risk: Mapping[str, float]) -> float | None:
    """Pearson r between a technique's weighted risk and its mean coverage value."""
    rows = [i for i, t in enumerate(matrix.techniques) if t in weighted_risk]
    if len(rows) < 3:
        return None
    coverage = matrix.numeric()[rows].mean(axis=1)
    risk = np.array([weighted_risk[matrix.techniques[i]] for i in rows], dtype=float)
    if np.ptp(coverage) == 0 or np.ptp(risk) == 0:
        return None
    return float(np.corrcoef(risk, coverage)[0, 1])


@dataclass(frozen=True)
class GapAnalysis:
    """Everything a report shows, computed once from a matrix."""

    matrix: CoverageMatrix
    threshold: CoverageLabel
    stats: dict[str, DatasetStats]
    best_by_k: tuple[CombinationResult, ...]
    pairs: tuple[CombinationResult, ...]
    gaps: TechniqueGaps
    overlap: dict[str, dict[str, float]]
    agreement: AgreementMatrix | None = None
    risk_correlation: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold.value,
            "matrix": self.matrix.to_dict(),
            "dataset_stats": {d: s.to_dict() for d, s in self.stats.items()},
            "best_combinations": [c.to_dict() for c in self.best_by_k],
            "pair_combinations": [c.to_dict() for c in self.pairs],
            "gaps": self.gaps.to_dict(),
            "dataset_overlap": self.overlap,
            "agreement": self.agreement.to_dict() if self.agreement else None,
            "risk_coverage_correlation": self.risk_correlation,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GapAnalysis":
        return cls(
            matrix=CoverageMatrix.from_dict(d["matrix"]),
            threshold=CoverageLabel(d["threshold"]),
            stats={k: DatasetStats.from_dict(v) for k, v in d["dataset_stats"].items()},
            best_by_k=tuple(CombinationResult.from_dict(c) for c in d["best_combinations"]),
            pairs=tuple(CombinationResult.from_dict(c) for c in d["pair_combinations"]),
            gaps=TechniqueGaps.from_dict(d["gaps"]),
            overlap=d["dataset_overlap"],
            agreement=AgreementMatrix.from_dict(d["agreement"]) if d.get("agreement") else None,
            risk_correlation=d.get("risk_coverage_correlation"),
        )


def analyze(
    matrix: CoverageMatrix,
    assessor_sets: Sequence[Sequence[AssessmentRecord]] = (),
    weighted_risk: Mapping[str, float] | None = None,
    threshold: CoverageLabel = CoverageLabel.PARTIAL,
) -> GapAnalysis:
    """Run every analytic. Agreement needs exactly two assessor sets (the first two are used)."""
    n = len(matrix.datasets)
    pairs = tuple(ranked_combinations(matrix, 2, threshold)) if 2 <= n <= EXHAUSTIVE_LIMIT else ()
    return GapAnalysis(
        matrix=matrix,
        threshold=threshold,
        stats=dataset_stats(matrix),
        best_by_k=tuple(best_combination(matrix, k, threshold) for k in range(1, n + 1)),
        pairs=pairs,
        gaps=technique_gaps(matrix),
        overlap=dataset_overlap(matrix, threshold),
        agreement=agreement(assessor_sets[0], assessor_sets[1]) if len(assessor_sets) >= 2 else None,
        risk_correlation=risk_coverage_correlation(matrix, weighted_risk) if weighted_risk else None,
    )
