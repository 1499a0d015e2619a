"""Oriented-box detection text codec and confidence-free evaluation toolkit."""

from .codec import (
    CategorySet,
    CodecError,
    ParseReport,
    ParseWarning,
    ResponseDoc,
    dequantize,
    fuzzy_match,
    levenshtein,
    parse,
    quantize,
    serialize,
)
from .dataset import (
    Corpus,
    DatasetError,
    Sample,
    balanced_factors,
    load_dota,
    merge_balanced,
    merge_concat,
)
from .detections import Detection, canonical_key
from .geometry import (
    GeometryError,
    Point,
    QuadBox,
    canonicalize,
    convex_intersection,
    iou,
    shoelace_area,
)
from .metrics import (
    EvalConfig,
    F1Result,
    MapNcResult,
    MetricsError,
    MetricsReport,
    SweepResult,
    average_precision,
    evaluate,
    f1_scores,
    map_nc,
    match_class,
    sweep_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "CategorySet",
    "CodecError",
    "Corpus",
    "DatasetError",
    "Detection",
    "EvalConfig",
    "F1Result",
    "GeometryError",
    "MapNcResult",
    "MetricsError",
    "MetricsReport",
    "ParseReport",
    "ParseWarning",
    "Point",
    "QuadBox",
    "ResponseDoc",
    "Sample",
    "SweepResult",
    "average_precision",
    "balanced_factors",
    "canonical_key",
    "canonicalize",
    "convex_intersection",
    "dequantize",
    "evaluate",
    "f1_scores",
    "fuzzy_match",
    "iou",
    "levenshtein",
    "load_dota",
    "map_nc",
    "match_class",
    "merge_balanced",
    "merge_concat",
    "parse",
    "quantize",
    "serialize",
    "shoelace_area",
    "sweep_thresholds",
]
