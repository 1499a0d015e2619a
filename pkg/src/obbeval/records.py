"""Line-delimited detection exchange files.

Each line is ``image_id<TAB>x1 y1 x2 y2 x3 y3 x4 y4 category confidence``
with coordinates in pixels.  The record after the tab matches the
ground-truth annotation line format, with a confidence instead of the
difficulty flag.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List

from .detections import Detection
from .geometry import canonicalize


class RecordError(ValueError):
    """Malformed detection exchange file."""


def format_detection(det: Detection) -> str:
    conf = det.confidence if det.confidence is not None else 1.0
    coords = " ".join(f"{c:.6f}" for c in det.box.flat())
    return f"{det.image_id}\t{coords} {det.category} {conf:.6f}"


def write_detections(path, detections: Iterable[Detection]) -> None:
    lines = [format_detection(d) for d in detections]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_detections(path) -> List[Detection]:
    out: list[Detection] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if "\t" not in line:
            raise RecordError(f"{path}:{lineno}: missing image id column")
        image_id, rest = line.split("\t", 1)
        parts = rest.split()
        if len(parts) < 10:
            raise RecordError(
                f"{path}:{lineno}: expected 8 coordinates + category + confidence"
            )
        try:
            coords = [float(v) for v in parts[:8]]
            conf = float(parts[-1])
        except ValueError as exc:
            raise RecordError(f"{path}:{lineno}: {exc}") from exc
        category = " ".join(parts[8:-1])
        box = canonicalize(list(zip(coords[0::2], coords[1::2])))
        out.append(Detection(image_id, category, box, confidence=conf))
    return out
