"""Static SVG snapshot of one recorded simulation step.

Sheep are filled by true kind (normal, shepherd-ignoring, variant); a red
ring marks sheep the classifier labeled variant at that step. Output is a
deterministic function of the inputs.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .core import SheepKind

CANVAS = 640.0
MARGIN = 40.0

KIND_COLORS = {
    "normal": "#4c78a8",
    "unresponsive": "#f58518",
    "variant": "#b279a2",
    "inert": "#9d9d9d",
}


def _kind_color(kind: SheepKind) -> str:
    if kind.is_normal:
        return KIND_COLORS["normal"]
    if kind.is_unresponsive:
        return KIND_COLORS["unresponsive"]
    if kind.is_variant:
        return KIND_COLORS["variant"]
    return KIND_COLORS["inert"]


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def render_snapshot(
    sheep_pos: np.ndarray,
    shepherd_pos: np.ndarray,
    goal_center: np.ndarray,
    goal_radius: float,
    kinds: Sequence[SheepKind],
    labels: Optional[np.ndarray] = None,
    step: int = 0,
) -> str:
    """Build the SVG document for one step."""
    pts = np.vstack([sheep_pos, shepherd_pos[None, :], goal_center[None, :]])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    lo = np.minimum(lo, goal_center - goal_radius)
    hi = np.maximum(hi, goal_center + goal_radius)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1.0))
    scale = (CANVAS - 2 * MARGIN) / span

    def to_px(p) -> tuple[float, float]:
        # y grows upward in the world, downward in SVG
        return (
            MARGIN + (float(p[0]) - lo[0]) * scale,
            CANVAS - MARGIN - (float(p[1]) - lo[1]) * scale,
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS:.0f}" '
        f'height="{CANVAS:.0f}" viewBox="0 0 {CANVAS:.0f} {CANVAS:.0f}">',
        f'<rect width="{CANVAS:.0f}" height="{CANVAS:.0f}" fill="#ffffff"/>',
        f'<text x="{MARGIN:.0f}" y="24" font-family="monospace" font-size="14">k={step}</text>',
    ]
    gx, gy = to_px(goal_center)
    parts.append(
        f'<circle cx="{_fmt(gx)}" cy="{_fmt(gy)}" r="{_fmt(goal_radius * scale)}" '
        'fill="#e8f1e4" stroke="#54a24b" stroke-width="2"/>'
    )
    for i in range(sheep_pos.shape[0]):
        x, y = to_px(sheep_pos[i])
        color = _kind_color(kinds[i])
        stroke = "#d62728" if labels is not None and labels[i] else "#333333"
        width = 2.5 if labels is not None and labels[i] else 1.0
        parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="5" fill="{color}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )
    sx, sy = to_px(shepherd_pos)
    parts.append(
        f'<path d="M {_fmt(sx)} {_fmt(sy - 8)} L {_fmt(sx - 7)} {_fmt(sy + 6)} '
        f'L {_fmt(sx + 7)} {_fmt(sy + 6)} Z" fill="#1b1b1b"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
