"""Detection record type and the canonical ordering shared across modules."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .geometry import QuadBox

_WS_RE = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WS_RE.sub(" ", name.strip().lower())


@dataclass
class Detection:
    """One detected or annotated object.

    ``confidence`` is None for confidence-free sources (ground truth, parsed
    model text assigns 1.0 explicitly).  ``difficult`` is meaningful on
    ground-truth records only.
    """

    image_id: str
    category: str
    box: QuadBox
    confidence: Optional[float] = None
    difficult: bool = False


def canonical_key(det: Detection):
    """Deterministic sort key: category, image, raster order of vertex 0.

    This is the confidence-independent tie-break used everywhere a stable
    order is needed (serialization mirrors it in quantized space).
    """
    v = det.box.vertices
    return (normalize_name(det.category), det.image_id, v[0].y, v[0].x, det.box.flat())
