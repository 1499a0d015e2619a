"""Static SVG overlays of detections, color-keyed by category."""

from __future__ import annotations

from typing import Iterable, List
from xml.sax.saxutils import escape

from .detections import Detection

_PALETTE = (
    "#e6194b",
    "#3cb44b",
    "#4363d8",
    "#f58231",
    "#911eb4",
    "#46f0f0",
    "#f032e6",
    "#bcf60c",
    "#fabebe",
    "#008080",
    "#9a6324",
    "#800000",
)


def render_svg(detections: Iterable[Detection], image_width: float, image_height: float) -> str:
    """One SVG document with a polygon per box and a category legend."""
    dets = list(detections)
    categories = sorted({d.category for d in dets})
    colors = {cat: _PALETTE[i % len(_PALETTE)] for i, cat in enumerate(categories)}

    lines: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{image_width:g}" '
        f'height="{image_height:g}" viewBox="0 0 {image_width:g} {image_height:g}">',
        f'  <rect x="0" y="0" width="{image_width:g}" height="{image_height:g}" fill="#ffffff"/>',
    ]
    for det in dets:
        pts = " ".join(f"{p.x:.2f},{p.y:.2f}" for p in det.box.vertices)
        lines.append(
            f'  <polygon points="{pts}" fill="{colors[det.category]}" fill-opacity="0.25" '
            f'stroke="{colors[det.category]}" stroke-width="2"/>'
        )
    for i, cat in enumerate(categories):
        y = 20 + 18 * i
        lines.append(
            f'  <g class="legend"><rect x="8" y="{y - 10}" width="12" height="12" '
            f'fill="{colors[cat]}"/>'
            f'<text x="26" y="{y}" font-family="sans-serif" font-size="12">{escape(cat)}</text></g>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
