"""DOTA-style annotation loading and multi-dataset merge strategies."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .codec import CategorySet
from .detections import Detection
from .geometry import canonicalize


class DatasetError(ValueError):
    """Unreadable, malformed, or inconsistent annotation input."""


@dataclass
class Sample:
    image_id: str
    image_width: float
    image_height: float
    gts: List[Detection] = field(default_factory=list)
    source_dataset: str = ""


@dataclass
class Corpus:
    name: str
    samples: List[Sample]
    category_set: CategorySet

    def __len__(self) -> int:
        return len(self.samples)


# Header lines the DOTA devkit emits before annotations.
_HEADER_PREFIXES = ("imagesource:", "gsd:")


def load_dota(
    directory,
    category_set: CategorySet,
    image_size: Tuple[float, float] = (1024.0, 1024.0),
    sizes_file=None,
    name: Optional[str] = None,
) -> Corpus:
    """Load a directory of per-image annotation text files.

    Each line is ``x1 y1 x2 y2 x3 y3 x4 y4 category difficulty``.  Image
    dimensions come from an optional JSON sidecar mapping image id to
    ``[width, height]``; ids not listed (or with no sidecar) fall back to
    ``image_size``.
    """
    root = Path(directory)
    if not root.is_dir():
        raise DatasetError(f"not a directory: {root}")

    sizes: Dict[str, Sequence[float]] = {}
    if sizes_file is not None:
        try:
            sizes = json.loads(Path(sizes_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read sizes file {sizes_file}: {exc}") from exc

    samples: list[Sample] = []
    errors: list[str] = []
    for path in sorted(root.glob("*.txt")):
        image_id = path.stem
        width, height = sizes.get(image_id, image_size)
        if not (width > 0 and height > 0):
            errors.append(f"{path.name}: non-positive image size {width}x{height}")
            continue
        gts: list[Detection] = []
        try:
            lines = path.read_text().splitlines()
        except OSError as exc:
            errors.append(f"{path.name}: unreadable ({exc})")
            continue
        for lineno, raw in enumerate(lines, 1):
            line = raw.strip()
            if not line or line.lower().startswith(_HEADER_PREFIXES):
                continue
            err = _parse_gt_line(line, image_id, category_set, gts)
            if err:
                errors.append(f"{path.name}:{lineno}: {err}")
        samples.append(Sample(image_id, float(width), float(height), gts))
    if errors:
        raise DatasetError("annotation errors:\n" + "\n".join(errors))
    corpus_name = name if name is not None else root.name
    for s in samples:
        s.source_dataset = corpus_name
    return Corpus(corpus_name, samples, category_set)


def _parse_gt_line(
    line: str, image_id: str, category_set: CategorySet, out: List[Detection]
) -> Optional[str]:
    parts = line.split()
    if len(parts) < 10:
        return f"expected 8 coordinates + category + difficulty, got {len(parts)} fields"
    try:
        coords = [float(v) for v in parts[:8]]
    except ValueError:
        return f"non-numeric coordinates: {line!r}"
    try:
        difficulty = int(parts[-1])
    except ValueError:
        return f"non-integer difficulty flag: {parts[-1]!r}"
    raw_cat = " ".join(parts[8:-1])
    cat = category_set.resolve(raw_cat)
    if cat is None:
        return f"unknown category: {raw_cat!r}"
    box = canonicalize(list(zip(coords[0::2], coords[1::2])))
    out.append(Detection(image_id, cat, box, confidence=None, difficult=bool(difficulty)))
    return None


def _union_categories(corpora: Sequence[Corpus]) -> CategorySet:
    names: list[str] = []
    seen: set[str] = set()
    for corpus in corpora:
        for n in corpus.category_set.names:
            key = n.strip().lower()
            if key not in seen:
                seen.add(key)
                names.append(n)
    return CategorySet(names)


def _namespaced(corpus: Corpus, repeat: int, sample: Sample) -> str:
    prefix = corpus.name if repeat == 0 else f"{corpus.name}~{repeat}"
    return f"{prefix}/{sample.image_id}"


def merge_concat(corpora: Sequence[Corpus]) -> Corpus:
    """Plain union of corpora; image ids are namespaced by source name."""
    if not corpora:
        raise DatasetError("merge requires at least one corpus")
    return _merge(corpora, [1] * len(corpora), "concat")


def balanced_factors(sizes: Sequence[int]) -> List[int]:
    """Whole-corpus repetition factors that oversample smaller corpora."""
    if any(s <= 0 for s in sizes):
        raise DatasetError("balanced merge requires non-empty corpora")
    largest = max(sizes)
    return [max(1, int(math.floor(largest / s + 0.5))) for s in sizes]


def merge_balanced(
    corpora: Sequence[Corpus], factors: Optional[Sequence[int]] = None
) -> Corpus:
    """Oversampling union: each corpus repeated whole to match the largest."""
    if not corpora:
        raise DatasetError("merge requires at least one corpus")
    if factors is None:
        factors = balanced_factors([len(c) for c in corpora])
    elif len(factors) != len(corpora):
        raise DatasetError("one repetition factor per corpus required")
    return _merge(corpora, list(factors), "balanced")


def _merge(corpora: Sequence[Corpus], factors: Sequence[int], name: str) -> Corpus:
    merged: list[Sample] = []
    seen_ids: set[str] = set()
    for corpus, reps in zip(corpora, factors):
        for k in range(reps):
            for s in corpus.samples:
                new_id = _namespaced(corpus, k, s)
                if new_id in seen_ids:
                    raise DatasetError(f"duplicate namespaced image id: {new_id}")
                seen_ids.add(new_id)
                merged.append(
                    Sample(
                        image_id=new_id,
                        image_width=s.image_width,
                        image_height=s.image_height,
                        gts=[
                            Detection(new_id, g.category, g.box, g.confidence, g.difficult)
                            for g in s.gts
                        ],
                        source_dataset=corpus.name,
                    )
                )
    return Corpus(name, merged, _union_categories(corpora))


def corpus_manifest(
    merged: Corpus, sources: Sequence[Corpus], factors: Sequence[int], strategy: str
) -> dict:
    """JSON-serializable description of a merge result."""
    return {
        "name": merged.name,
        "strategy": strategy,
        "size": len(merged),
        "categories": list(merged.category_set.names),
        "sources": [
            {"name": c.name, "size": len(c), "repetition": int(r)}
            for c, r in zip(sources, factors)
        ],
    }
