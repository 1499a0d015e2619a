"""Text codec between structured detections and the canonical token response.

A response is a sequence of category blocks joined by ``<sep>``.  Each block
is a category name followed by one ``<loc_V>`` token per quantized coordinate
(8 tokens per box, V in 0..1000).  Blocks are sorted alphabetically by
category; boxes inside a block by the quantized starting vertex in raster
order.  An image with no objects serializes to the empty string.

Parsing is total: malformed fragments become warnings, never exceptions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .detections import Detection, normalize_name
from .geometry import QuadBox, canonicalize

LOC_TOKEN_RE = re.compile(r"<loc_(\d+)>")
SEPARATOR = "<sep>"
NUM_BINS = 1000


class CodecError(ValueError):
    """Invalid arguments to the encoder (the decoder never raises)."""


class CategorySet:
    """Ordered set of category names, unique after normalization."""

    def __init__(self, names: Iterable[str]):
        cleaned: list[str] = []
        by_norm: dict[str, str] = {}
        for raw in names:
            name = str(raw)
            if not name.strip():
                raise CodecError("category names must be non-empty")
            if "<" in name or ">" in name:
                raise CodecError(f"category name may not contain '<' or '>': {name!r}")
            key = normalize_name(name)
            if key in by_norm:
                raise CodecError(f"duplicate category after normalization: {name!r}")
            by_norm[key] = name
            cleaned.append(name)
        if not cleaned:
            raise CodecError("category set is empty")
        self.names: Tuple[str, ...] = tuple(cleaned)
        self._by_norm = by_norm

    def resolve(self, name: str) -> Optional[str]:
        """Canonical spelling for an exact (normalized) match, else None."""
        return self._by_norm.get(normalize_name(name))

    def __iter__(self):
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._by_norm


@dataclass(frozen=True)
class ResponseDoc:
    text: str
    image_width: float
    image_height: float


@dataclass(frozen=True)
class ParseWarning:
    kind: str  # unknown-category | dangling-coordinates | out-of-range-bin | empty-response
    span: Tuple[int, int]
    message: str


@dataclass
class ParseReport:
    detections: List[Detection] = field(default_factory=list)
    warnings: List[ParseWarning] = field(default_factory=list)


def _round_half_away(x: float) -> int:
    if x >= 0.0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def quantize(value: float, extent: float) -> int:
    """Map a pixel coordinate to an integer bin in [0, 1000].

    Rounds half away from zero; out-of-image values clamp to the range.
    """
    if not extent > 0:
        raise CodecError(f"extent must be positive, got {extent}")
    b = _round_half_away(value / extent * NUM_BINS)
    return min(NUM_BINS, max(0, b))


def dequantize(bin_value: int, extent: float) -> float:
    """Map a bin back to pixels."""
    if not extent > 0:
        raise CodecError(f"extent must be positive, got {extent}")
    if not 0 <= bin_value <= NUM_BINS:
        raise CodecError(f"bin out of range [0, {NUM_BINS}]: {bin_value}")
    return bin_value / NUM_BINS * extent


def quantized_bins(box: QuadBox, image_width: float, image_height: float) -> Tuple[int, ...]:
    """Quantize a box and re-canonicalize in bin space.

    Canonicalizing after quantization makes the emitted tuple a pure
    function of the bins, so serialize(parse(serialize(x))) is
    byte-identical even when rounding shifts the starting-vertex choice.
    """
    pts = [(quantize(p.x, image_width), quantize(p.y, image_height)) for p in box.vertices]
    q = canonicalize(pts)
    return tuple(int(round(c)) for p in q.vertices for c in (p.x, p.y))


def _box_sort_key(bins: Sequence[int]):
    # Raster order of the starting vertex, then the full tuple.
    return (bins[1], bins[0]) + tuple(bins[2:])


def serialize(
    annotations: Iterable[Detection],
    categories: CategorySet,
    image_width: float,
    image_height: float,
) -> ResponseDoc:
    """Render detections as the canonical token response."""
    blocks: dict[str, list[Tuple[int, ...]]] = {}
    for det in annotations:
        cat = categories.resolve(det.category)
        if cat is None:
            raise CodecError(f"unknown category: {det.category!r}")
        blocks.setdefault(cat, []).append(quantized_bins(det.box, image_width, image_height))

    parts = []
    for cat in sorted(blocks):
        boxes = sorted(blocks[cat], key=_box_sort_key)
        tokens = "".join(f"<loc_{v}>" for bins in boxes for v in bins)
        parts.append(cat + tokens)
    return ResponseDoc(SEPARATOR.join(parts), image_width, image_height)


def parse(doc: ResponseDoc, categories: CategorySet) -> ParseReport:
    """Extract detections from arbitrary model text; never raises.

    Parsed boxes are dequantized, canonicalized, and carry confidence 1.0.
    Every discarded fragment is reported as a warning.
    """
    report = ParseReport()
    text = doc.text
    if not text.strip():
        report.warnings.append(
            ParseWarning("empty-response", (0, len(text)), "response contains no detections")
        )
        return report

    offset = 0
    for block in text.split(SEPARATOR):
        _parse_block(block, offset, doc, categories, report)
        offset += len(block) + len(SEPARATOR)
    return report


def _parse_block(
    block: str,
    offset: int,
    doc: ResponseDoc,
    categories: CategorySet,
    report: ParseReport,
) -> None:
    name: Optional[str] = None
    name_span = (offset, offset)
    values: list[int] = []
    values_span = (offset, offset)

    def flush() -> None:
        nonlocal name, values, name_span, values_span
        if name is None and not values:
            return
        if name is None:
            report.warnings.append(
                ParseWarning("unknown-category", values_span, "coordinates without a category name")
            )
        elif not values:
            report.warnings.append(
                ParseWarning(
                    "dangling-coordinates", name_span, f"category text {name!r} has no coordinates"
                )
            )
        else:
            _emit_boxes(name, name_span, values, values_span, doc, categories, report)
        name, values = None, []

    pos = 0
    for m in LOC_TOKEN_RE.finditer(block):
        pre = block[pos : m.start()]
        if pre.strip():
            flush()
            name = pre.strip()
            name_span = (offset + pos, offset + m.start())
        v = int(m.group(1))
        if not values:
            values_span = (offset + m.start(), offset + m.end())
        values.append(v)
        values_span = (values_span[0], offset + m.end())
        pos = m.end()
    tail = block[pos:]
    if tail.strip():
        flush()
        name = tail.strip()
        name_span = (offset + pos, offset + len(block))
    flush()


def _emit_boxes(
    name: str,
    name_span: Tuple[int, int],
    values: Sequence[int],
    values_span: Tuple[int, int],
    doc: ResponseDoc,
    categories: CategorySet,
    report: ParseReport,
) -> None:
    cat = fuzzy_match(name, categories)
    if cat is None:
        report.warnings.append(
            ParseWarning(
                "unknown-category", name_span, f"category text {name!r} matches no known category"
            )
        )
        return
    n_boxes = len(values) // 8
    for k in range(n_boxes):
        bins = values[8 * k : 8 * k + 8]
        bad = [v for v in bins if v > NUM_BINS]
        if bad:
            report.warnings.append(
                ParseWarning(
                    "out-of-range-bin",
                    values_span,
                    f"box for {cat!r} has bins outside [0, {NUM_BINS}]: {bad}",
                )
            )
            continue
        pts = [
            (dequantize(bins[2 * i], doc.image_width), dequantize(bins[2 * i + 1], doc.image_height))
            for i in range(4)
        ]
        report.detections.append(
            Detection(image_id="", category=cat, box=canonicalize(pts), confidence=1.0)
        )
    rest = len(values) % 8
    if rest:
        report.warnings.append(
            ParseWarning(
                "dangling-coordinates",
                values_span,
                f"{rest} trailing coordinate token(s) for {cat!r} do not form a box",
            )
        )


def levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions, and substitutions."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def fuzzy_match(name: str, categories: CategorySet) -> Optional[str]:
    """Recover the intended category for possibly-mangled model text.

    Exact matches (after normalization) win.  Otherwise a category is a
    candidate when either the text is a substring of it and the edit
    distance is within the length gap plus 2 (abbreviations such as
    "pool" for "swimming pool"), or the normalized edit distance is at
    most 0.34 (typos).  Substring candidates outrank typo candidates;
    remaining ties break by distance, then alphabetically.
    """
    query = normalize_name(name)
    if not query:
        return None
    exact = categories.resolve(name)
    if exact is not None:
        return exact

    best = None
    for cat in categories.names:
        target = normalize_name(cat)
        dist = levenshtein(query, target)
        if query in target and dist <= len(target) - len(query) + 2:
            tier = 0
        elif dist / max(len(query), len(target)) <= 0.34:
            tier = 1
        else:
            continue
        key = (tier, dist, cat)
        if best is None or key < best:
            best = key
    return best[2] if best is not None else None
