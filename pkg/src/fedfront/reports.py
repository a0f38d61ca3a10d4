"""Self-contained SVG reports: the privacy-utility frontier and the epsilon heatmap.

The files are hand-built markup with the source values embedded as data-*
attributes (formatted exactly like the metrics CSV), so plot contents can
be asserted textually without a rasterizer.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import MetricsRow, format_value

_PALETTE = (
    "#1f6fb4",
    "#d95f02",
    "#1b9e77",
    "#7570b3",
    "#e7298a",
    "#66a61e",
    "#a6761d",
    "#666666",
)

_WIDTH = 760
_HEIGHT = 520
_MARGIN_L = 70
_MARGIN_R = 170
_MARGIN_T = 40
_MARGIN_B = 60


def _svg_open(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{escape(title)}</text>',
    ]


def _axis(parts: list[str], x_label: str, y_label: str) -> None:
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>'
    )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_HEIGHT - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="18" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.1f})">{escape(y_label)}</text>'
    )


def emit_frontier(rows: Sequence[MetricsRow], path: str | Path) -> None:
    """Recall-versus-epsilon scatter/polyline, one series per (stage, clip).

    Epsilon is drawn on a log10 axis; markers are annotated with their noise
    multiplier and carry the exact values as data attributes.
    """
    usable = [r for r in rows if math.isfinite(r.epsilon) and r.epsilon > 0]
    eps_values = sorted({r.epsilon for r in usable})
    if len(eps_values) < 2:
        raise ValueError("frontier needs rows with at least 2 distinct epsilon values")

    lo, hi = math.log10(eps_values[0]), math.log10(eps_values[-1])
    span = hi - lo
    x0, x1 = _MARGIN_L, _WIDTH - _MARGIN_R
    y0, y1 = _HEIGHT - _MARGIN_B, _MARGIN_T

    def sx(eps: float) -> float:
        return x0 + (math.log10(eps) - lo) / span * (x1 - x0)

    def sy(recall: float) -> float:
        return y0 - recall * (y0 - y1)

    series: dict[tuple[str, float], list[MetricsRow]] = {}
    for r in usable:
        series.setdefault((r.stage, r.clip), []).append(r)

    parts = _svg_open("Privacy-utility frontier: recall vs epsilon")
    _axis(parts, "privacy budget epsilon (log scale)", "recall on held-out test set")
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(tick)
        parts.append(
            f'<line x1="{x0 - 4}" y1="{y:.1f}" x2="{x0}" y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:g}</text>'
        )

    for si, key in enumerate(sorted(series)):
        stage, clip = key
        color = _PALETTE[si % len(_PALETTE)]
        pts = sorted(series[key], key=lambda r: (r.epsilon, r.sigma, r.seed))
        coords = " ".join(f"{sx(r.epsilon):.2f},{sy(r.recall):.2f}" for r in pts)
        name = f"{stage} C={clip:g}"
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'data-series="{escape(name)}" points="{coords}"/>'
        )
        for r in pts:
            cx, cy = sx(r.epsilon), sy(r.recall)
            parts.append(
                f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3.5" fill="{color}" '
                f'data-stage="{escape(r.stage)}" data-clip="{format_value(r.clip)}" '
                f'data-sigma="{format_value(r.sigma)}" '
                f'data-epsilon="{format_value(r.epsilon)}" '
                f'data-recall="{format_value(r.recall)}"/>'
            )
            parts.append(
                f'<text x="{cx + 5:.2f}" y="{cy - 5:.2f}" font-family="sans-serif" '
                f'font-size="9" fill="{color}">s={r.sigma:g}</text>'
            )
        ly = _MARGIN_T + 16 * si
        lx = _WIDTH - _MARGIN_R + 12
        parts.append(
            f'<rect x="{lx}" y="{ly - 8}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{lx + 14}" y="{ly + 1}" font-family="sans-serif" '
            f'font-size="11">{escape(name)}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def _heat_color(frac: float) -> str:
    # Light straw for large epsilon down to deep red for the most private cells.
    frac = min(max(frac, 0.0), 1.0)
    r = int(round(255 - 128 * frac))
    g = int(round(232 - 190 * frac))
    b = int(round(170 - 130 * frac))
    return f"rgb({r},{g},{b})"


def emit_epsilon_heatmap(rows: Sequence[MetricsRow], path: str | Path) -> None:
    """Sigma-by-clip grid of privacy budgets with numeric cell annotations.

    Every (sigma, clip) pair must be covered by the same number of rows;
    each cell shows the worst (largest) epsilon among its runs. Because the
    accountant never sees the clipping norm, all cells in a sigma row hold
    the same value, and the emitted note says so.
    """
    sigmas = sorted({r.sigma for r in rows})
    clips = sorted({r.clip for r in rows})
    if not sigmas or not clips:
        raise ValueError("heatmap needs at least one sigma and one clip value")
    cells: dict[tuple[float, float], list[float]] = {}
    for r in rows:
        cells.setdefault((r.sigma, r.clip), []).append(r.epsilon)
    sizes = {len(v) for v in cells.values()}
    if len(cells) != len(sigmas) * len(clips) or len(sizes) != 1:
        raise ValueError("rows do not cover a full sigma x clip grid (ragged grid)")

    values = {key: max(eps_list) for key, eps_list in cells.items()}
    finite = [v for v in values.values() if math.isfinite(v) and v > 0]
    if finite:
        lo = math.log10(min(finite))
        hi = math.log10(max(finite))
        span = (hi - lo) or 1.0
    else:
        lo, span = 0.0, 1.0

    x0, x1 = _MARGIN_L, _WIDTH - 40
    y0, y1 = _MARGIN_T + 20, _HEIGHT - _MARGIN_B - 20
    cell_w = (x1 - x0) / len(clips)
    cell_h = (y1 - y0) / len(sigmas)

    parts = _svg_open("Privacy budget epsilon by noise multiplier and clipping norm")
    for si, sigma in enumerate(sigmas):
        for ci, clip in enumerate(clips):
            eps = values[(sigma, clip)]
            if math.isfinite(eps) and eps > 0:
                frac = 1.0 - (math.log10(eps) - lo) / span
            else:
                frac = 0.0
            x = x0 + ci * cell_w
            y = y0 + si * cell_h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" '
                f'height="{cell_h:.1f}" fill="{_heat_color(frac)}" stroke="white" '
                f'data-sigma="{format_value(sigma)}" data-clip="{format_value(clip)}" '
                f'data-epsilon="{format_value(eps)}"/>'
            )
            label = f"{eps:.2f}" if math.isfinite(eps) and eps < 1e4 else f"{eps:.3g}"
            parts.append(
                f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 + 4:.1f}" '
                f'text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{label}</text>'
            )
        parts.append(
            f'<text x="{x0 - 8}" y="{y0 + si * cell_h + cell_h / 2 + 4:.1f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11">'
            f"sigma={sigma:g}</text>"
        )
    for ci, clip in enumerate(clips):
        parts.append(
            f'<text x="{x0 + ci * cell_w + cell_w / 2:.1f}" y="{y1 + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="11">'
            f"C={clip:g}</text>"
        )
    parts.append(
        f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="10" data-note="epsilon-constant-per-sigma-row">'
        "Note: epsilon depends only on (sigma, sample rate, steps, delta); "
        "within each sigma row the value is constant across clipping norms.</text>"
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
