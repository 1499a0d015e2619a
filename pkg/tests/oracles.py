"""Independent reference implementations used to freeze expected values.

Everything here deliberately avoids the code paths under test: IoU via
Monte Carlo rasterization, AP via explicit PR-curve enumeration,
Levenshtein via the full DP matrix, matching via exhaustive brute force.
"""

from __future__ import annotations

import random

import numpy as np


def monte_carlo_iou(quad_a, quad_b, n_samples=1_000_000, seed=0):
    """Estimate IoU of two convex quads by uniform point sampling."""
    a = np.asarray([[p[0], p[1]] for p in quad_a], dtype=float)
    b = np.asarray([[p[0], p[1]] for p in quad_b], dtype=float)
    allpts = np.vstack([a, b])
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    rng = np.random.default_rng(seed)
    pts = lo + rng.random((n_samples, 2)) * (hi - lo)
    in_a = _inside_convex(pts, a)
    in_b = _inside_convex(pts, b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(in_a & in_b)
    return inter / union


def _inside_convex(pts, poly):
    """Point-in-convex-polygon for consistently wound vertex rings."""
    n = len(poly)
    pos = np.ones(len(pts), dtype=bool)
    neg = np.ones(len(pts), dtype=bool)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cross = (x2 - x1) * (pts[:, 1] - y1) - (y2 - y1) * (pts[:, 0] - x1)
        pos &= cross >= 0
        neg &= cross <= 0
    return pos | neg


def random_convex_quad(rng: random.Random, lo=0.0, hi=10.0, max_tries=1000):
    """Sample 4 points whose convex hull is a proper quadrilateral."""
    for _ in range(max_tries):
        pts = [(rng.uniform(lo, hi), rng.uniform(lo, hi)) for _ in range(4)]
        hull = _convex_hull(pts)
        if len(hull) == 4 and _hull_area(hull) > 0.5:
            return hull
    raise RuntimeError("could not sample a convex quadrilateral")


def _convex_hull(pts):
    pts = sorted(set(pts))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _hull_area(pts):
    s = 0.0
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def levenshtein_matrix(a: str, b: str) -> int:
    """Full-matrix edit distance (the classic textbook DP)."""
    m, n = len(a), len(b)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[m][n]


def ap_enumeration(tp_flags, n_positives, mode):
    """AP by explicit PR-point enumeration from an ordered TP/FP sequence."""
    if n_positives <= 0 or not tp_flags:
        return 0.0
    points = []  # (recall, precision)
    tp = fp = 0
    for flag in tp_flags:
        if flag:
            tp += 1
        else:
            fp += 1
        points.append((tp / n_positives, tp / (tp + fp)))

    def max_prec_at(recall_floor):
        vals = [p for r, p in points if r >= recall_floor]
        return max(vals) if vals else 0.0

    if mode == "voc11":
        anchors = [i / 10.0 for i in range(11)]
        return sum(max_prec_at(r) for r in anchors) / 11.0

    # All-points: integrate max-precision-at-recall>=r over recall segments.
    recalls = sorted({r for r, _ in points})
    ap = 0.0
    prev = 0.0
    for r in recalls:
        ap += (r - prev) * max_prec_at(r)
        prev = r
    return ap


def brute_force_match(pred_boxes_iou_rows, gt_difficult, iou_threshold):
    """Reference greedy matcher mirroring the stated rules, written plainly."""
    gt_taken = [False] * len(gt_difficult)
    labels = []
    for row in pred_boxes_iou_rows:
        candidates = [
            (v, j)
            for j, v in enumerate(row)
            if gt_difficult[j] or not gt_taken[j]
        ]
        best = max(candidates, default=None, key=lambda t: (t[0], -t[1]))
        if best is not None and best[0] >= iou_threshold:
            j = best[1]
            if gt_difficult[j]:
                labels.append("ignored")
            else:
                gt_taken[j] = True
                labels.append("tp")
        else:
            labels.append("fp")
    return labels
