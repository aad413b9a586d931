"""Minimal self-contained SVG emission (inline styles, no external assets)."""
from __future__ import annotations

import math

_LABEL_COLORS = {
    "powerless": "#b0b0b0",
    "powerful": "#ffffff",
    "below_dense": "#d9d9d9",
    "below_sparse_small_r": "#a6a6a6",
    "below_sparse_large_r": "#d9d9d9",
    "above_dense_near": "#6b6b6b",
    "above_dense_far": "#4c72b0",
    "above_sparse": "#4c72b0",
    "boundary_fixed_s": "#dd8452",
    "gap": "#f7f7f7",
}

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_esc(title)}</text>',
    ]


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0 = _ML, _H - _MB
    x1, y1 = _W - _MR, _MT
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>',
        f'<text x="{(x0 + x1) / 2}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_esc(x_label)}</text>',
        f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">{_esc(y_label)}</text>',
    ]


def _scale(lo: float, hi: float, pixel_lo: float, pixel_hi: float):
    span = hi - lo if hi > lo else 1.0

    def to_px(v):
        return pixel_lo + (v - lo) / span * (pixel_hi - pixel_lo)

    return to_px


def phase_diagram_svg(cells, title: str, x_label: str, y_label: str) -> str:
    """Colored-cell rendering of a labelled (alpha, y, label) grid."""
    xs = sorted({c[0] for c in cells})
    ys = sorted({c[1] for c in cells})
    sx = _scale(min(xs), max(xs), _ML, _W - _MR)
    sy = _scale(min(ys), max(ys), _H - _MB, _MT)
    cw = (_W - _ML - _MR) / len(xs)
    ch = (_H - _MT - _MB) / len(ys)
    parts = _header(title)
    for x, y, label in cells:
        color = _LABEL_COLORS.get(label, "#e377c2")
        parts.append(
            f'<rect x="{sx(x) - cw / 2:.2f}" y="{sy(y) - ch / 2:.2f}" '
            f'width="{cw + 0.5:.2f}" height="{ch + 0.5:.2f}" fill="{color}"/>'
        )
    parts += _axes(x_label, y_label)
    labels = sorted({c[2] for c in cells})
    for i, label in enumerate(labels):
        lx, ly = _ML + 8, _MT + 14 + 16 * i
        parts.append(
            f'<rect x="{lx}" y="{ly - 10}" width="12" height="12" '
            f'fill="{_LABEL_COLORS.get(label, "#e377c2")}" stroke="black" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{lx + 16}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{_esc(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def risk_scatter_svg(
    points,
    title: str,
    x_label: str,
    reference_slope: float | None = None,
) -> str:
    """log-risk scatter against a normalizer with an optional dashed
    reference line of the given slope anchored at the first point."""
    if not points:
        raise ValueError("no points to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    pad_x = 0.05 * (max(xs) - min(xs) or 1.0)
    pad_y = 0.05 * (max(ys) - min(ys) or 1.0)
    sx = _scale(min(xs) - pad_x, max(xs) + pad_x, _ML, _W - _MR)
    sy = _scale(min(ys) - pad_y, max(ys) + pad_y, _H - _MB, _MT)
    parts = _header(title)
    if reference_slope is not None and math.isfinite(reference_slope):
        x0, x1 = min(xs), max(xs)
        y0 = ys[0]
        y1 = y0 + reference_slope * (x1 - x0)
        parts.append(
            f'<line x1="{sx(x0):.2f}" y1="{sy(y0):.2f}" x2="{sx(x1):.2f}" '
            f'y2="{sy(y1):.2f}" stroke="#c44e52" stroke-width="1.5" '
            f'stroke-dasharray="6,4"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 4}" y="{_MT + 14}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="#c44e52">'
            f"reference slope {reference_slope:.4g}</text>"
        )
    for x, y in points:
        parts.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" '
            f'fill="#4c72b0" stroke="black" stroke-width="0.5"/>'
        )
    parts += _axes(x_label, "log risk")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
