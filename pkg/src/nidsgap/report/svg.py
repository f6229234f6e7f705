"""Tiny SVG writers for bar charts and heatmaps; no plotting runtime needed."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1"]
LABEL_COLOURS = {"Full": "#2e7d32", "Partial": "#f9a825", "Unknown": "#9e9e9e", "No": "#c62828"}


def _svg(width: int, height: int, body: list[str]) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def bar_chart(title: str, labels: Sequence[str], values: Sequence[float], y_max: float = 1.0) -> str:
    width, height = max(360, 110 * len(labels) + 80), 360
    left, bottom, top = 60, 80, 40
    plot_h = height - bottom - top
    bar_w = (width - left - 20) / max(1, len(labels))
    body = [f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for i in range(6):
        frac = i / 5
        y = top + plot_h * (1 - frac)
        body.append(f'<line x1="{left}" x2="{width - 20}" y1="{y:.1f}" y2="{y:.1f}" stroke="#ddd"/>')
        body.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">{frac * y_max:.2f}</text>')
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * min(value, y_max) / y_max
        x = left + i * bar_w + bar_w * 0.15
        body.append(
            f'<rect x="{x:.1f}" y="{top + plot_h - h:.1f}" width="{bar_w * 0.7:.1f}" height="{h:.1f}" '
            f'fill="{PALETTE[i % len(PALETTE)]}"><title>{escape(label)}: {value:.3f}</title></rect>'
        )
        body.append(
            f'<text x="{x + bar_w * 0.35:.1f}" y="{top + plot_h - h - 4:.1f}" text-anchor="middle">{value:.3f}</text>'
        )
        body.append(
            f'<text x="{x + bar_w * 0.35:.1f}" y="{height - bottom + 18}" text-anchor="middle">{escape(label)}</text>'
        )
    return _svg(int(width), height, body)


def heatmap(
    title: str,
    rows: Sequence[str],
    cols: Sequence[str],
    values: Sequence[Sequence[float | None]],
    cell: int = 48,
) -> str:
    """Blue scale over [0, 1]; ``None`` cells are left blank."""
    left, top = 130, 120
    width, height = left + cell * len(cols) + 20, top + cell * len(rows) + 20
    body = [f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for j, c in enumerate(cols):
        x = left + j * cell + cell / 2
        body.append(f'<text transform="translate({x:.1f},{top - 8}) rotate(-45)">{escape(c)}</text>')
    for i, r in enumerate(rows):
        y = top + i * cell
        body.append(f'<text x="{left - 6}" y="{y + cell / 2 + 4:.1f}" text-anchor="end">{escape(r)}</text>')
        for j, v in enumerate(values[i]):
            x = left + j * cell
            if v is None:
                body.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#fff" stroke="#ccc"/>')
                continue
            shade = int(235 - 180 * max(0.0, min(1.0, v)))
            ink = "#fff" if v > 0.6 else "#000"
            body.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#fff"/>'
            )
            body.append(
                f'<text x="{x + cell / 2}" y="{y + cell / 2 + 4}" text-anchor="middle" fill="{ink}">{v:.2f}</text>'
            )
    return _svg(width, height, body)


def label_grid(title: str, rows: Sequence[str], cols: Sequence[str], labels: Sequence[Sequence[str]]) -> str:
    cell_w, cell_h = 70, 16
    left, top = 90, 110
    width = left + cell_w * len(cols) + 20
    height = top + cell_h * len(rows) + 50
    body = [f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for j, c in enumerate(cols):
        x = left + j * cell_w + cell_w / 2
        body.append(f'<text transform="translate({x:.1f},{top - 8}) rotate(-45)">{escape(c)}</text>')
    for i, r in enumerate(rows):
        y = top + i * cell_h
        body.append(f'<text x="{left - 6}" y="{y + 12}" text-anchor="end" font-size="10">{escape(r)}</text>')
        for j, lab in enumerate(labels[i]):
            body.append(
                f'<rect x="{left + j * cell_w}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{LABEL_COLOURS.get(lab, "#fff")}" stroke="#fff"><title>{escape(r)} / {escape(cols[j])}: {lab}</title></rect>'
            )
    legend_y = top + cell_h * len(rows) + 25
    for k, (lab, colour) in enumerate(LABEL_COLOURS.items()):
        x = left + k * 90
        body.append(f'<rect x="{x}" y="{legend_y - 10}" width="12" height="12" fill="{colour}"/>')
        body.append(f'<text x="{x + 16}" y="{legend_y}">{lab}</text>')
    return _svg(width, height, body)
