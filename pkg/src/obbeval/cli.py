"""Command-line interface.

Subcommands: encode (annotations -> token responses), decode (responses ->
detections), eval (confidence-free metrics report), merge (multi-dataset
manifests), render (SVG overlays), api (JSON-over-stdio for bindings).

Every flag default can be overridden with an ``OBBEVAL_``-prefixed
environment variable, e.g. ``OBBEVAL_IOU_THR=0.25``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Tuple

from . import __version__
from .api import run_api
from .codec import CategorySet, CodecError, ResponseDoc, parse, serialize
from .dataset import (
    Corpus,
    DatasetError,
    balanced_factors,
    corpus_manifest,
    load_dota,
    merge_balanced,
    merge_concat,
)
from .detections import Detection
from .geometry import GeometryError
from .metrics import EvalConfig, MetricsError, evaluate, sweep_to_csv
from .records import RecordError, read_detections, write_detections
from .render import render_svg

ENV_PREFIX = "OBBEVAL_"


class CliError(ValueError):
    """Fatal command-line failure with a user-facing message."""


def _env(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name, fallback)


def _parse_image_size(value: str) -> Tuple[float, float]:
    try:
        w, h = value.lower().split("x")
        size = (float(w), float(h))
    except ValueError as exc:
        raise CliError(f"--image-size must look like 1024x1024, got {value!r}") from exc
    if size[0] <= 0 or size[1] <= 0:
        raise CliError(f"image size must be positive, got {value!r}")
    return size


def load_categories(path) -> CategorySet:
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    except OSError as exc:
        raise CliError(f"cannot read categories file {path}: {exc}") from exc
    names = [ln for ln in lines if ln and not ln.startswith("#")]
    return CategorySet(names)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obbeval",
        description="Oriented-box detection text codec and confidence-free evaluation",
    )
    parser.add_argument("--version", action="version", version=f"obbeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_image_size(p):
        p.add_argument(
            "--image-size",
            default=_env("IMAGE_SIZE", "1024x1024"),
            help="fallback WxH for images without sidecar sizes (default 1024x1024)",
        )

    p = sub.add_parser("encode", help="serialize ground-truth annotations to responses")
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--categories", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes-file", default=None)
    add_image_size(p)

    p = sub.add_parser("decode", help="parse model responses into a detections file")
    p.add_argument("--responses", required=True)
    p.add_argument("--categories", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--warnings-out", default=None, help="default: <out>.warnings.json")
    add_image_size(p)

    p = sub.add_parser("eval", help="compute mAP_nc / mF1 for a detections file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--categories", required=True)
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--sweep-csv", default=None, help="write the sweep curve here (with --sweep)")
    p.add_argument("--iou-thr", type=float, default=float(_env("IOU_THR", 0.5)))
    p.add_argument(
        "--interp",
        choices=["voc11", "allpoints"],
        default=_env("INTERP", "voc11"),
    )
    p.add_argument("--runs", type=int, default=int(_env("RUNS", 10)))
    p.add_argument("--seed", type=int, default=int(_env("SEED", 0)))
    p.add_argument("--constant", type=float, default=float(_env("CONSTANT", 1.0)))
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--workers", type=int, default=int(_env("WORKERS", 0)))
    p.add_argument("--sizes-file", default=None)
    add_image_size(p)

    p = sub.add_parser("merge", help="merge DOTA-style corpora into one manifest")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--categories", required=True)
    p.add_argument("--strategy", choices=["concat", "balanced"], default="concat")
    p.add_argument("--out-manifest", required=True)
    add_image_size(p)

    p = sub.add_parser("render", help="draw detections as SVG overlays")
    p.add_argument("--detections", required=True)
    p.add_argument("--out-dir", required=True)
    add_image_size(p)

    sub.add_parser("api", help="serve one JSON request on stdin (bindings transport)")
    return parser


def cmd_encode(args) -> int:
    cats = load_categories(args.categories)
    size = _parse_image_size(args.image_size)
    corpus = load_dota(args.gt_dir, cats, image_size=size, sizes_file=args.sizes_file)
    lines = []
    for sample in corpus.samples:
        doc = serialize(sample.gts, cats, sample.image_width, sample.image_height)
        lines.append(f"{sample.image_id}\t{doc.text}")
    Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""))
    print(f"encoded {len(lines)} image(s) -> {args.out}")
    return 0


def cmd_decode(args) -> int:
    cats = load_categories(args.categories)
    width, height = _parse_image_size(args.image_size)
    detections: list[Detection] = []
    warnings: dict[str, list] = {}
    n_images = 0
    for lineno, raw in enumerate(Path(args.responses).read_text().splitlines(), 1):
        if not raw.strip():
            continue
        if "\t" in raw:
            image_id, text = raw.split("\t", 1)
        else:
            raise CliError(f"{args.responses}:{lineno}: expected 'image_id<TAB>response'")
        n_images += 1
        report = parse(ResponseDoc(text, width, height), cats)
        for det in report.detections:
            det.image_id = image_id
            detections.append(det)
        if report.warnings:
            warnings[image_id] = [
                {"kind": w.kind, "span": list(w.span), "message": w.message}
                for w in report.warnings
            ]
    write_detections(args.out, detections)
    warnings_path = args.warnings_out or args.out + ".warnings.json"
    Path(warnings_path).write_text(json.dumps(warnings, sort_keys=True, indent=2) + "\n")
    print(f"decoded {n_images} response(s): {len(detections)} detection(s) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    cats = load_categories(args.categories)
    size = _parse_image_size(args.image_size)
    corpus = load_dota(args.gt_dir, cats, image_size=size, sizes_file=args.sizes_file)
    gts = [g for sample in corpus.samples for g in sample.gts]
    preds = read_detections(args.pred)

    known_ids = {s.image_id for s in corpus.samples}
    unknown = sorted({p.image_id for p in preds} - known_ids)
    if unknown:
        raise CliError("predictions reference unknown image ids: " + ", ".join(unknown))

    for p in preds:
        resolved = cats.resolve(p.category)
        if resolved is not None:
            p.category = resolved

    if args.sweep:
        confs = {p.confidence for p in preds}
        if len(confs) <= 1:
            raise CliError("--sweep requires predictions with informative confidence scores")

    config = EvalConfig(
        iou_threshold=args.iou_thr,
        interpolation=args.interp,
        n_random_runs=args.runs,
        base_seed=args.seed,
        constant_value=args.constant,
    )
    workers = args.workers if args.workers > 0 else None
    report = evaluate(preds, gts, config, sweep=args.sweep, workers=workers)

    if args.out_json:
        Path(args.out_json).write_text(report.to_json())
    if args.out_csv:
        Path(args.out_csv).write_text(report.to_csv())
    if args.sweep_csv and report.sweep is not None:
        Path(args.sweep_csv).write_text(sweep_to_csv(report.sweep))

    print(f"mAP_nc mean={report.map_nc_mean:.6f} std={report.map_nc_std:.6f} mF1={report.mf1:.6f}")
    if report.sweep is not None:
        t, v = report.sweep.best_map_nc
        tf, vf = report.sweep.best_mf1
        print(f"best mAP_nc={v:.6f} @ thr={t:.2f}; best mF1={vf:.6f} @ thr={tf:.2f}")
    return 0


def cmd_merge(args) -> int:
    cats = load_categories(args.categories)
    size = _parse_image_size(args.image_size)
    corpora = [load_dota(d, cats, image_size=size) for d in args.dirs]
    if args.strategy == "balanced":
        factors = balanced_factors([len(c) for c in corpora])
        merged = merge_balanced(corpora, factors)
    else:
        factors = [1] * len(corpora)
        merged = merge_concat(corpora)
    manifest = corpus_manifest(merged, corpora, factors, args.strategy)
    Path(args.out_manifest).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"merged {len(corpora)} corpora ({args.strategy}): {len(merged)} samples")
    return 0


def cmd_render(args) -> int:
    width, height = _parse_image_size(args.image_size)
    preds = read_detections(args.detections)
    by_image: dict[str, list[Detection]] = {}
    for p in preds:
        by_image.setdefault(p.image_id, []).append(p)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for image_id, dets in sorted(by_image.items()):
        safe = image_id.replace("/", "_").replace(os.sep, "_")
        (out_dir / f"{safe}.svg").write_text(render_svg(dets, width, height))
    print(f"rendered {len(by_image)} image(s) -> {out_dir}")
    return 0


_COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "merge": cmd_merge,
    "render": cmd_render,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "api":
        return run_api(sys.stdin, sys.stdout)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, CodecError, DatasetError, MetricsError, GeometryError, RecordError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
