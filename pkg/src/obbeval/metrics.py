"""Confidence-free detection metrics.

Implements VOC-style greedy matching and average precision, the
no-confidence mAP (confidences replaced by seeded random draws plus one
constant run, reported with error statistics), per-class F1 / mF1, and
confidence-threshold sweeps for conventional detectors.

All randomness is counter-based (Philox keyed by base_seed + run index,
one draw per detection ordinal in canonical order), so results never
depend on scheduling and parallel evaluation is bitwise-identical to
serial.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .detections import Detection, canonical_key
from .geometry import iou as box_iou

RECALL_ANCHORS = tuple(i / 10.0 for i in range(11))
_INTERP_MODES = {"voc11": "voc11", "all-points": "all-points", "allpoints": "all-points"}


class MetricsError(ValueError):
    """Invalid evaluation configuration or inputs."""


def _default_sweep_grid() -> Tuple[float, ...]:
    return tuple(round(0.05 * i, 2) for i in range(1, 20))


@dataclass
class EvalConfig:
    iou_threshold: float = 0.5
    interpolation: str = "voc11"
    n_random_runs: int = 10
    base_seed: int = 0
    constant_value: float = 1.0
    sweep_grid: Tuple[float, ...] = field(default_factory=_default_sweep_grid)

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold < 1.0:
            raise MetricsError(f"iou_threshold must be in (0, 1), got {self.iou_threshold}")
        mode = _INTERP_MODES.get(self.interpolation)
        if mode is None:
            raise MetricsError(f"unknown interpolation mode: {self.interpolation!r}")
        self.interpolation = mode
        if self.n_random_runs < 1:
            raise MetricsError("n_random_runs must be >= 1")
        grid = tuple(float(t) for t in self.sweep_grid)
        if any(not 0.0 < t < 1.0 for t in grid):
            raise MetricsError("sweep_grid values must lie in (0, 1)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise MetricsError("sweep_grid must be strictly increasing")
        self.sweep_grid = grid


@dataclass
class RunValue:
    kind: str  # "random" | "constant"
    seed: Optional[int]
    value: float


@dataclass
class MapNcResult:
    runs: List[RunValue]
    mean: float
    std: float
    per_class_ap: Dict[str, float]  # from the constant run
    excluded_classes: List[str] = field(default_factory=list)

    @property
    def random_values(self) -> List[float]:
        return [r.value for r in self.runs if r.kind == "random"]


@dataclass
class F1Result:
    per_class_f1: Dict[str, float]
    mf1: float
    counts: Dict[str, Tuple[int, int, int]]  # category -> (tp, fp, fn)


@dataclass
class SweepPoint:
    threshold: float
    map_nc_mean: float
    map_nc_std: float
    mf1: float


@dataclass
class SweepResult:
    points: List[SweepPoint]
    best_map_nc: Tuple[float, float]  # (threshold, value)
    best_mf1: Tuple[float, float]


@dataclass
class MetricsReport:
    per_class_ap: Dict[str, float]
    map_nc_mean: float
    map_nc_std: float
    map_nc_runs: List[RunValue]
    per_class_f1: Dict[str, float]
    mf1: float
    counts: Dict[str, Tuple[int, int, int]]
    sweep: Optional[SweepResult] = None

    def to_dict(self) -> dict:
        d = {
            "per_class_ap": dict(sorted(self.per_class_ap.items())),
            "map_nc_mean": self.map_nc_mean,
            "map_nc_std": self.map_nc_std,
            "map_nc_runs": [
                {"kind": r.kind, "seed": r.seed, "value": r.value} for r in self.map_nc_runs
            ],
            "per_class_f1": dict(sorted(self.per_class_f1.items())),
            "mf1": self.mf1,
            "counts": {
                c: {"tp": t, "fp": f, "fn": n}
                for c, (t, f, n) in sorted(self.counts.items())
            },
        }
        if self.sweep is not None:
            d["sweep"] = sweep_to_dict(self.sweep)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "ap", "f1", "tp", "fp", "fn"])
        for cat in sorted(set(self.per_class_ap) | set(self.per_class_f1)):
            tp, fp, fn = self.counts.get(cat, (0, 0, 0))
            w.writerow(
                [
                    cat,
                    repr(self.per_class_ap.get(cat, 0.0)),
                    repr(self.per_class_f1.get(cat, 0.0)),
                    tp,
                    fp,
                    fn,
                ]
            )
        w.writerow(["__mean__", repr(self.map_nc_mean), repr(self.mf1), "", "", ""])
        return buf.getvalue()


def sweep_to_dict(sweep: SweepResult) -> dict:
    return {
        "points": [
            {
                "threshold": p.threshold,
                "map_nc_mean": p.map_nc_mean,
                "map_nc_std": p.map_nc_std,
                "mf1": p.mf1,
            }
            for p in sweep.points
        ],
        "best_map_nc": {"threshold": sweep.best_map_nc[0], "value": sweep.best_map_nc[1]},
        "best_mf1": {"threshold": sweep.best_mf1[0], "value": sweep.best_mf1[1]},
    }


def sweep_to_csv(sweep: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "map_nc_mean", "map_nc_std", "mf1"])
    for p in sweep.points:
        w.writerow([repr(p.threshold), repr(p.map_nc_mean), repr(p.map_nc_std), repr(p.mf1)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


def _greedy_match(iou_rows: Sequence[Sequence[float]], difficult: Sequence[bool], iou_threshold: float):
    """Greedy one-to-one matching over precomputed IoUs.

    ``iou_rows[i][j]`` is the IoU of prediction i (already in evaluation
    order) against GT j.  Difficult GTs are never consumed; a best match
    against one yields an ignored prediction.  Returns per-prediction
    labels and per-GT matched flags.
    """
    used = [False] * len(difficult)
    labels: list[str] = []
    for row in iou_rows:
        best_j = -1
        best_iou = 0.0
        for j, v in enumerate(row):
            if used[j] and not difficult[j]:
                continue
            if v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            if difficult[best_j]:
                labels.append("ignored")
            else:
                used[best_j] = True
                labels.append("tp")
        else:
            labels.append("fp")
    return labels, used


def match_class(
    preds: Sequence[Detection], gts: Sequence[Detection], iou_threshold: float
):
    """Match same-class predictions to GTs of one image.

    Predictions must already be in evaluation order (descending
    confidence with the canonical tie-break).
    """
    rows = [[box_iou(p.box, g.box) for g in gts] for p in preds]
    return _greedy_match(rows, [g.difficult for g in gts], iou_threshold)


# ---------------------------------------------------------------------------
# Average precision
# ---------------------------------------------------------------------------


def average_precision(labels: Sequence[str], n_positives: int, interpolation: str = "voc11") -> float:
    """AP from ordered TP/FP labels ("ignored" entries are dropped).

    ``labels`` must be sorted by descending confidence with a
    deterministic tie-break.  Returns 0.0 when there are no positives.
    """
    mode = _INTERP_MODES.get(interpolation)
    if mode is None:
        raise MetricsError(f"unknown interpolation mode: {interpolation!r}")
    if n_positives <= 0:
        return 0.0
    tp_flags = [lab == "tp" for lab in labels if lab != "ignored"]
    if not tp_flags:
        return 0.0

    recalls: list[float] = []
    precisions: list[float] = []
    tp = fp = 0
    for flag in tp_flags:
        if flag:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_positives)
        precisions.append(tp / (tp + fp))

    if mode == "voc11":
        total = 0.0
        for anchor in RECALL_ANCHORS:
            best = 0.0
            for r, p in zip(recalls, precisions):
                if r >= anchor and p > best:
                    best = p
            total += best
        return total / len(RECALL_ANCHORS)

    # All-points: area under the right-envelope interpolated PR curve.
    mrec = [0.0] + recalls + [1.0]
    mpre = [0.0] + precisions + [0.0]
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    ap = 0.0
    for i in range(1, len(mrec)):
        if mrec[i] != mrec[i - 1]:
            ap += (mrec[i] - mrec[i - 1]) * mpre[i]
    return ap


# ---------------------------------------------------------------------------
# Evaluation engine
# ---------------------------------------------------------------------------


class _Evaluator:
    """Caches per-(class, image) IoU matrices so repeated runs only re-sort."""

    def __init__(self, preds: Iterable[Detection], gts: Iterable[Detection]):
        self.preds = sorted(preds, key=canonical_key)
        gt_groups: dict[tuple[str, str], list[Detection]] = {}
        self.n_pos: dict[str, int] = {}
        for g in gts:
            gt_groups.setdefault((g.category, g.image_id), []).append(g)
            if not g.difficult:
                self.n_pos[g.category] = self.n_pos.get(g.category, 0) + 1
            else:
                self.n_pos.setdefault(g.category, 0)

        # (class, image) -> (pred ordinals, iou rows, difficult flags)
        self.cells: dict[tuple[str, str], tuple[list[int], list[list[float]], list[bool]]] = {}
        for ordinal, p in enumerate(self.preds):
            key = (p.category, p.image_id)
            cell = self.cells.get(key)
            if cell is None:
                gt_list = gt_groups.get(key, [])
                cell = ([], [], [g.difficult for g in gt_list])
                self.cells[key] = cell
                cell_gts = gt_list
            else:
                cell_gts = gt_groups.get(key, [])
            cell[0].append(ordinal)
            cell[1].append([box_iou(p.box, g.box) for g in cell_gts])

        self.classes = sorted(set(self.n_pos) | {p.category for p in self.preds})

    def ap_per_class(
        self,
        confidences: Sequence[float],
        iou_threshold: float,
        interpolation: str,
        workers: Optional[int] = None,
    ) -> Dict[str, float]:
        cells_by_class: dict[str, list[tuple[list[int], list[list[float]], list[bool]]]] = {}
        for (cat, _img), cell in self.cells.items():
            cells_by_class.setdefault(cat, []).append(cell)

        def one_class(cat: str) -> tuple[str, float]:
            entries: list[tuple[tuple[float, int], str]] = []
            for ordinals, rows, difficult in cells_by_class.get(cat, []):
                order = sorted(range(len(ordinals)), key=lambda i: (-confidences[ordinals[i]], ordinals[i]))
                labels, _ = _greedy_match([rows[i] for i in order], difficult, iou_threshold)
                for i, lab in zip(order, labels):
                    entries.append(((-confidences[ordinals[i]], ordinals[i]), lab))
            entries.sort(key=lambda e: e[0])
            ap = average_precision([lab for _k, lab in entries], self.n_pos.get(cat, 0), interpolation)
            return cat, ap

        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                results = dict(ex.map(one_class, self.classes))
        else:
            results = dict(one_class(c) for c in self.classes)
        return results

    def counts_per_class(
        self, confidences: Sequence[float], iou_threshold: float
    ) -> Dict[str, Tuple[int, int, int]]:
        counts: dict[str, list[int]] = {c: [0, 0, 0] for c in self.classes}
        for (cat, _img), (ordinals, rows, difficult) in self.cells.items():
            order = sorted(range(len(ordinals)), key=lambda i: (-confidences[ordinals[i]], ordinals[i]))
            labels, _ = _greedy_match([rows[i] for i in order], difficult, iou_threshold)
            for lab in labels:
                if lab == "tp":
                    counts[cat][0] += 1
                elif lab == "fp":
                    counts[cat][1] += 1
        for cat in self.classes:
            counts[cat][2] = self.n_pos.get(cat, 0) - counts[cat][0]
        return {c: (v[0], v[1], v[2]) for c, v in counts.items()}


def _random_confidences(base_seed: int, run_index: int, n: int) -> List[float]:
    gen = np.random.Generator(np.random.Philox(key=int(base_seed) + int(run_index)))
    return gen.random(n).tolist()


def _mean(values: Sequence[float]) -> float:
    return statistics.fmean(values) if values else 0.0


def map_nc(
    preds: Iterable[Detection],
    gts: Iterable[Detection],
    config: Optional[EvalConfig] = None,
    workers: Optional[int] = None,
) -> MapNcResult:
    """mAP with confidence substitution: random runs plus one constant run."""
    config = config or EvalConfig()
    ev = _Evaluator(preds, gts)
    n = len(ev.preds)

    runs: list[RunValue] = []
    for k in range(config.n_random_runs):
        confs = _random_confidences(config.base_seed, k, n)
        per_class = ev.ap_per_class(confs, config.iou_threshold, config.interpolation, workers)
        runs.append(RunValue("random", config.base_seed + k, _mean(list(per_class.values()))))

    const_confs = [float(config.constant_value)] * n
    per_class_const = ev.ap_per_class(const_confs, config.iou_threshold, config.interpolation, workers)
    runs.append(RunValue("constant", None, _mean(list(per_class_const.values()))))

    values = [r.value for r in runs]
    return MapNcResult(
        runs=runs,
        mean=_mean(values),
        std=statistics.pstdev(values) if len(values) > 1 else 0.0,
        per_class_ap=per_class_const,
    )


def f1_scores(
    preds: Iterable[Detection],
    gts: Iterable[Detection],
    iou_threshold: float = 0.5,
    workers: Optional[int] = None,
) -> F1Result:
    """Per-class F1 and its unweighted mean at a fixed IoU threshold."""
    ev = _Evaluator(preds, gts)
    confs = [p.confidence if p.confidence is not None else 1.0 for p in ev.preds]
    counts = ev.counts_per_class(confs, iou_threshold)

    per_class: dict[str, float] = {}
    for cat, (tp, fp, fn) in counts.items():
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per_class[cat] = (
            2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return F1Result(per_class, _mean(list(per_class.values())), counts)


def sweep_thresholds(
    preds: Sequence[Detection],
    gts: Iterable[Detection],
    config: Optional[EvalConfig] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """Confidence-threshold sweep for conventional detectors.

    For each grid threshold, predictions with lower confidence are dropped
    and mAP_nc / mF1 computed on the survivors.
    """
    config = config or EvalConfig()
    preds = list(preds)
    if any(p.confidence is None for p in preds):
        raise MetricsError("sweep requires a confidence on every prediction")
    gts = list(gts)

    points: list[SweepPoint] = []
    for t in config.sweep_grid:
        survivors = [p for p in preds if p.confidence >= t]
        m = map_nc(survivors, gts, config, workers)
        f = f1_scores(survivors, gts, config.iou_threshold, workers)
        points.append(SweepPoint(t, m.mean, m.std, f.mf1))

    best_map = max(points, key=lambda p: (p.map_nc_mean, -p.threshold))
    best_f1 = max(points, key=lambda p: (p.mf1, -p.threshold))
    return SweepResult(
        points, (best_map.threshold, best_map.map_nc_mean), (best_f1.threshold, best_f1.mf1)
    )


def evaluate(
    preds: Iterable[Detection],
    gts: Iterable[Detection],
    config: Optional[EvalConfig] = None,
    sweep: bool = False,
    workers: Optional[int] = None,
) -> MetricsReport:
    """Full confidence-free report: mAP_nc runs, per-class AP/F1, optional sweep."""
    config = config or EvalConfig()
    preds = list(preds)
    gts = list(gts)
    m = map_nc(preds, gts, config, workers)
    f = f1_scores(preds, gts, config.iou_threshold, workers)
    sweep_result = sweep_thresholds(preds, gts, config, workers) if sweep else None
    return MetricsReport(
        per_class_ap=m.per_class_ap,
        map_nc_mean=m.mean,
        map_nc_std=m.std,
        map_nc_runs=m.runs,
        per_class_f1=f.per_class_f1,
        mf1=f.mf1,
        counts=f.counts,
        sweep=sweep_result,
    )
