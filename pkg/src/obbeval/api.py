"""JSON-over-stdio request handler backing out-of-process bindings.

One request object on stdin, one response object on stdout.  Requests are
``{"op": <name>, ...}``; errors come back as
``{"error": {"kind": ..., "message": ...}}`` with a nonzero exit code.

Detections on the wire are
``{"image_id", "category", "vertices": [[x, y] * 4], "confidence", "difficult"}``.
"""

from __future__ import annotations

import json
from typing import Optional

from . import __version__
from .codec import CategorySet, ResponseDoc, parse, serialize
from .detections import Detection
from .geometry import canonicalize, iou
from .metrics import (
    EvalConfig,
    f1_scores,
    map_nc,
    sweep_thresholds,
    sweep_to_dict,
)


def _det_from_wire(d: dict) -> Detection:
    return Detection(
        image_id=str(d.get("image_id", "")),
        category=str(d["category"]),
        box=canonicalize(d["vertices"]),
        confidence=None if d.get("confidence") is None else float(d["confidence"]),
        difficult=bool(d.get("difficult", False)),
    )


def _det_to_wire(det: Detection) -> dict:
    return {
        "image_id": det.image_id,
        "category": det.category,
        "vertices": [[p.x, p.y] for p in det.box.vertices],
        "confidence": det.confidence,
        "difficult": det.difficult,
    }


def _config_from_wire(d: Optional[dict]) -> EvalConfig:
    if not d:
        return EvalConfig()
    known = {"iou_threshold", "interpolation", "n_random_runs", "base_seed", "constant_value", "sweep_grid"}
    kwargs = {k: v for k, v in d.items() if k in known}
    if "sweep_grid" in kwargs:
        kwargs["sweep_grid"] = tuple(kwargs["sweep_grid"])
    return EvalConfig(**kwargs)


def _handle(req: dict) -> dict:
    op = req.get("op")
    if op == "version":
        return {"version": __version__}

    if op == "iou":
        a = canonicalize(req["a"])
        b = canonicalize(req["b"])
        return {"iou": iou(a, b)}

    if op == "serialize":
        cats = CategorySet(req["categories"])
        dets = [_det_from_wire(d) for d in req["detections"]]
        doc = serialize(dets, cats, float(req["image_width"]), float(req["image_height"]))
        return {"text": doc.text}

    if op == "parse":
        cats = CategorySet(req["categories"])
        doc = ResponseDoc(str(req["text"]), float(req["image_width"]), float(req["image_height"]))
        report = parse(doc, cats)
        return {
            "detections": [_det_to_wire(d) for d in report.detections],
            "warnings": [
                {"kind": w.kind, "span": list(w.span), "message": w.message}
                for w in report.warnings
            ],
        }

    if op == "map_nc":
        preds = [_det_from_wire(d) for d in req["preds"]]
        gts = [_det_from_wire(d) for d in req["gts"]]
        result = map_nc(preds, gts, _config_from_wire(req.get("config")))
        return {
            "runs": [{"kind": r.kind, "seed": r.seed, "value": r.value} for r in result.runs],
            "mean": result.mean,
            "std": result.std,
            "per_class_ap": dict(sorted(result.per_class_ap.items())),
        }

    if op == "f1":
        preds = [_det_from_wire(d) for d in req["preds"]]
        gts = [_det_from_wire(d) for d in req["gts"]]
        result = f1_scores(preds, gts, float(req.get("iou_threshold", 0.5)))
        return {
            "per_class_f1": dict(sorted(result.per_class_f1.items())),
            "mf1": result.mf1,
            "counts": {
                c: {"tp": t, "fp": f, "fn": n}
                for c, (t, f, n) in sorted(result.counts.items())
            },
        }

    if op == "sweep":
        preds = [_det_from_wire(d) for d in req["preds"]]
        gts = [_det_from_wire(d) for d in req["gts"]]
        result = sweep_thresholds(preds, gts, _config_from_wire(req.get("config")))
        return sweep_to_dict(result)

    raise ValueError(f"unknown op: {op!r}")


def run_api(stdin, stdout) -> int:
    try:
        req = json.load(stdin)
        resp = _handle(req)
        code = 0
    except Exception as exc:  # total surface: every failure becomes a typed error
        resp = {"error": {"kind": type(exc).__name__, "message": str(exc)}}
        code = 1
    json.dump(resp, stdout, sort_keys=True)
    stdout.write("\n")
    return code
