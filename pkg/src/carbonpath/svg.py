"""Minimal SVG scatter and bar charts for sweep output."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT, PAD = 640, 420, 60


def _scale(values: Sequence[float], lo_px: float, hi_px: float):
    lo, hi = min(values), max(values)
    span = (hi - lo) or 1.0
    return lambda v: lo_px + (v - lo) / span * (hi_px - lo_px)


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" '
        f'font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{HEIGHT / 2}" text-anchor="middle" transform="rotate(-90 15 {HEIGHT / 2})">'
        f'{escape(ylabel)}</text>',
    ]


COLORS = {"2D": "#555555", "2.5D": "#1f77b4", "3D": "#d62728", "2.5D+3D": "#2ca02c"}


def scatter(xs: Sequence[float], ys: Sequence[float], labels: Sequence[str], groups: Sequence[str],
            title: str, xlabel: str, ylabel: str) -> str:
    fx = _scale(xs, PAD, WIDTH - PAD)
    fy = _scale(ys, HEIGHT - PAD, PAD)
    parts = _frame(title, xlabel, ylabel)
    for x, y, label, group in zip(xs, ys, labels, groups):
        parts.append(f'<circle cx="{fx(x):.1f}" cy="{fy(y):.1f}" r="4" fill="{COLORS.get(group, "black")}">'
                     f'<title>{escape(label)}</title></circle>')
    for i, (group, color) in enumerate(COLORS.items()):
        parts.append(f'<rect x="{WIDTH - PAD - 70}" y="{PAD + 14 * i - 8}" width="8" height="8" fill="{color}"/>'
                     f'<text x="{WIDTH - PAD - 58}" y="{PAD + 14 * i}">{escape(group)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bars(values: Sequence[float], labels: Sequence[str], title: str, ylabel: str) -> str:
    parts = _frame(title, "", ylabel)
    top = max(values) or 1.0
    slot = (WIDTH - 2 * PAD) / max(len(values), 1)
    for i, (v, label) in enumerate(zip(values, labels)):
        h = v / top * (HEIGHT - 2 * PAD)
        x = PAD + i * slot + slot * 0.1
        parts.append(f'<rect x="{x:.1f}" y="{HEIGHT - PAD - h:.1f}" width="{slot * 0.8:.1f}" height="{h:.1f}" '
                     f'fill="#1f77b4"><title>{escape(label)}: {v:.4g}</title></rect>')
        parts.append(f'<text x="{x + slot * 0.4:.1f}" y="{HEIGHT - PAD + 12}" text-anchor="middle" '
                     f'font-size="8">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
