"""Write analytics to disk: JSON, CSV matrices, a Markdown summary, SVG charts."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

from ..errors import IoFailure
from . import svg
from .analytics import GapAnalysis


def _dump_json(obj: Any) -> str:
    # json emits the shortest round-trip repr for floats, which keeps output platform-stable
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def coverage_csv(analysis: GapAnalysis) -> str:
    m = analysis.matrix
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["attack_id", *m.datasets])
    for t in m.techniques:
        w.writerow([t, *(m.cells[(t, d)].value for d in m.datasets)])
    return buf.getvalue()


def agreement_grid(analysis: GapAnalysis) -> list[list[float | None]]:
    """Diagonal: assessor agreement (None when only one assessor ran). Off-diagonal: coverage overlap."""
    names = analysis.matrix.datasets
    rates = analysis.agreement.per_dataset if analysis.agreement else {}
    return [[rates.get(a) if a == b else analysis.overlap[a][b] for b in names] for a in names]


def agreement_csv(analysis: GapAnalysis) -> str:
    names = analysis.matrix.datasets
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", *names])
    for a, row in zip(names, agreement_grid(analysis)):
        w.writerow([a, *("" if v is None else repr(v) for v in row)])
    return buf.getvalue()


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def markdown(analysis: GapAnalysis, metadata: dict[str, Any]) -> str:
    m = analysis.matrix
    out = ["# NIDS dataset coverage report", ""]
    out += ["## Run metadata", "", "| key | value |", "|---|---|"]
    for key in sorted(metadata):
        value = metadata[key]
        if not isinstance(value, str):
            value = json.dumps(value, sort_keys=True)
        out.append(f"| {key} | `{value}` |")
    out += [
        "",
        f"Techniques assessed: {len(m.techniques)}. Datasets: {len(m.datasets)}. "
        f"Combination coverage counts a technique when some dataset reaches **{analysis.threshold.value}** or better.",
        "",
        "## Per-dataset coverage",
        "",
        "| dataset | mean score | Full | Full % | Partial | Unknown | No |",
        "|---|---|---|---|---|---|---|",
    ]
    for d, s in analysis.stats.items():
        h = s.label_histogram
        out.append(
            f"| {d} | {s.mean_score:.3f} | {s.full_count} | {_pct(s.full_fraction)} | "
            f"{h['Partial']} | {h['Unknown']} | {h['No']} |"
        )
    out += ["", "## Best combination per size", "", "| k | datasets | covered | coverage | method |", "|---|---|---|---|---|"]
    for c in analysis.best_by_k:
        method = "greedy (heuristic)" if c.heuristic else "exhaustive"
        out.append(
            f"| {len(c.subset)} | {' + '.join(c.subset)} | {c.covered_count} | {_pct(c.coverage_fraction)} | {method} |"
        )
    if analysis.pairs:
        out += ["", "## Two-dataset combinations", "", "| datasets | coverage |", "|---|---|"]
        out += [f"| {' + '.join(c.subset)} | {_pct(c.coverage_fraction)} |" for c in analysis.pairs]
    g = analysis.gaps
    out += ["", "## Gaps", ""]
    out.append(f"Not covered by any dataset ({len(g.uncovered_everywhere)}): " + (", ".join(g.uncovered_everywhere) or "none"))
    out.append("")
    out.append(f"Minimal coverage, one Partial and no Full ({len(g.minimal_coverage)}): " + (", ".join(g.minimal_coverage) or "none"))
    if analysis.agreement:
        a = analysis.agreement
        out += ["", "## Assessor agreement", "", "| dataset | agreement |", "|---|---|"]
        out += [f"| {d} | {_pct(r)} |" for d, r in a.per_dataset.items()]
        out.append(f"| overall (pooled) | {_pct(a.overall_rate)} |")
    if analysis.risk_correlation is not None:
        out += ["", f"Pearson correlation between weighted risk and mean coverage: {analysis.risk_correlation:.3f}"]
    return "\n".join(out) + "\n"


def emit_report(out_dir, analysis: GapAnalysis, metadata: dict[str, Any], charts: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    files = {
        "report.json": _dump_json({"metadata": metadata, "analysis": analysis.to_dict()}),
        "coverage_matrix.csv": coverage_csv(analysis),
        "agreement.csv": agreement_csv(analysis),
        "report.md": markdown(analysis, metadata),
    }
    if charts:
        m = analysis.matrix
        names = list(analysis.stats)
        files["charts/mean_coverage.svg"] = svg.bar_chart(
            "Mean coverage score per dataset", names, [analysis.stats[d].mean_score for d in names]
        )
        files["charts/full_fraction.svg"] = svg.bar_chart(
            "Share of techniques with Full coverage", names, [analysis.stats[d].full_fraction for d in names]
        )
        files["charts/agreement.svg"] = svg.heatmap(
            "Assessor agreement (diagonal) and coverage overlap", m.datasets, m.datasets, agreement_grid(analysis)
        )
        files["charts/coverage_matrix.svg"] = svg.label_grid(
            "Coverage labels", m.techniques, m.datasets, [[m.cells[(t, d)].value for d in m.datasets] for t in m.techniques]
        )
    written = {}
    try:
        for name, text in files.items():
            path = out / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            written[name] = path
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc}") from exc
    return written


def load_report(path) -> tuple[GapAnalysis, dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return GapAnalysis.from_dict(data["analysis"]), data["metadata"]
