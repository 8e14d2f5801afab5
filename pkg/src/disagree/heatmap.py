"""Deterministic SVG heatmaps for pairwise disagreement matrices.

The output is plain hand-assembled SVG text (no plotting backend, no
timestamps), so identical matrices produce byte-identical files. Cells
interpolate linearly from a light tint at the metric's lower bound to a
dark blue at its upper bound: lighter means stronger disagreement.
"""

from __future__ import annotations

from pathlib import Path

from .errors import MetricError

__all__ = ["matrix_svg", "heatmap_filename", "write_heatmaps"]

CELL = 56
LEFT = 150
TOP = 70
LABEL_GAP = 8

LIGHT = (247, 251, 255)
DARK = (8, 48, 107)


def _bounds(metric: str) -> tuple[float, float]:
    return (-1.0, 1.0) if metric == "rank_correlation" else (0.0, 1.0)


def _cell_color(value: float, lo: float, hi: float) -> tuple[str, str]:
    """Fill and matching text color for one cell value."""
    t = (value - lo) / (hi - lo)
    t = min(1.0, max(0.0, t))
    rgb = tuple(round(l + t * (d - l)) for l, d in zip(LIGHT, DARK))
    fill = "#{:02x}{:02x}{:02x}".format(*rgb)
    text = "#ffffff" if t > 0.6 else "#1a1a1a"
    return fill, text


def matrix_svg(matrix) -> str:
    """Render one PairwiseMatrix (or its dict form) as an SVG string."""
    if isinstance(matrix, dict):
        metric = matrix["metric"]
        k = matrix["k"]
        methods = list(matrix["methods"])
        mean = matrix["mean"]
    else:
        metric = matrix.metric
        k = "all" if matrix.k is None else matrix.k
        methods = list(matrix.methods)
        mean = matrix.mean
    m = len(methods)
    if m == 0 or any(len(row) != m for row in mean) or len(mean) != m:
        raise MetricError(f"malformed matrix for {metric!r}: need a square methods x methods grid")
    lo, hi = _bounds(metric)
    width = LEFT + m * CELL + 20
    height = TOP + m * CELL + 20
    title = f"{metric} (k={k})"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{LEFT}" y="22" font-family="sans-serif" font-size="15" '
        f'font-weight="bold" fill="#1a1a1a">{title}</text>',
    ]
    for j, name in enumerate(methods):
        cx = LEFT + j * CELL + CELL // 2
        parts.append(
            f'<text x="{cx}" y="{TOP - LABEL_GAP}" font-family="sans-serif" font-size="11" '
            f'fill="#1a1a1a" text-anchor="end" '
            f'transform="rotate(35 {cx} {TOP - LABEL_GAP})">{name}</text>'
        )
    for i, name in enumerate(methods):
        cy = TOP + i * CELL + CELL // 2 + 4
        parts.append(
            f'<text x="{LEFT - LABEL_GAP}" y="{cy}" font-family="sans-serif" font-size="11" '
            f'fill="#1a1a1a" text-anchor="end">{name}</text>'
        )
    for i in range(m):
        for j in range(m):
            v = float(mean[i][j])
            fill, text = _cell_color(v, lo, hi)
            x, y = LEFT + j * CELL, TOP + i * CELL
            parts.append(
                f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{fill}" stroke="#ffffff" stroke-width="1"/>'
            )
            parts.append(
                f'<text x="{x + CELL // 2}" y="{y + CELL // 2 + 4}" font-family="sans-serif" '
                f'font-size="12" fill="{text}" text-anchor="middle">{v:.2f}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap_filename(metric: str, k) -> str:
    return f"{metric}_all.svg" if k in (None, "all") else f"{metric}_k{int(k)}.svg"


def write_heatmaps(matrices, out_dir: str | Path) -> list[Path]:
    """One SVG per (metric, k) into out_dir; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for mat in matrices:
        k = mat["k"] if isinstance(mat, dict) else mat.k
        metric = mat["metric"] if isinstance(mat, dict) else mat.metric
        path = out_dir / heatmap_filename(metric, k)
        path.write_text(matrix_svg(mat), encoding="utf-8")
        written.append(path)
    return written
