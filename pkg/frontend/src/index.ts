/**
 * Node bindings for the obbeval core.
 *
 * Zero logic lives here: every call is forwarded to the core's one-shot
 * JSON-over-stdio `api` subcommand (`python3 -m obbeval api`), so results are
 * bit-identical to what the core library and CLI produce. Set OBBEVAL_PYTHON
 * to point at a specific interpreter.
 */

import { spawnSync } from "node:child_process";

export type Vertex = [number, number];

/** Mirror of the core Detection, in plain JSON types. */
export type BoundDetection = {
  image_id: string;
  category: string;
  vertices: [Vertex, Vertex, Vertex, Vertex];
  confidence?: number | null;
  difficult?: boolean;
};

export type EvalConfigWire = {
  iou_threshold?: number;
  interpolation?: "voc11" | "all-points" | "allpoints";
  n_random_runs?: number;
  base_seed?: number;
  constant_value?: number;
  sweep_grid?: [number, number];
};

export type ParseWarningWire = {
  kind: string;
  span: [number, number];
  message: string;
};

export type ParseResult = {
  detections: BoundDetection[];
  warnings: ParseWarningWire[];
};

export type RunValueWire = { kind: string; seed: number | null; value: number };

export type MapNcResult = {
  runs: RunValueWire[];
  mean: number;
  std: number;
  per_class_ap: Record<string, number>;
};

export type F1Result = {
  per_class_f1: Record<string, number>;
  mf1: number;
  counts: Record<string, { tp: number; fp: number; fn: number }>;
};

export type SweepResult = {
  points: { threshold: number; map_nc_mean: number; map_nc_std: number; mf1: number }[];
  best_map_nc: { threshold: number; value: number };
  best_mf1: { threshold: number; value: number };
};

/** Error raised by the core, carrying its error kind (e.g. "CodecError"). */
export class CoreError extends Error {
  constructor(
    public readonly kind: string,
    message: string,
  ) {
    super(message);
    this.name = "CoreError";
  }
}

function call<T>(request: Record<string, unknown>): T {
  const python = process.env.OBBEVAL_PYTHON ?? "python3";
  const proc = spawnSync(python, ["-m", "obbeval", "api"], {
    input: JSON.stringify(request),
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) throw proc.error;
  let payload: unknown;
  try {
    payload = JSON.parse(proc.stdout);
  } catch {
    throw new CoreError(
      "ProtocolError",
      `core produced no JSON (exit ${proc.status}): ${proc.stderr}`,
    );
  }
  const err = (payload as { error?: { kind: string; message: string } }).error;
  if (err) throw new CoreError(err.kind, err.message);
  return payload as T;
}

export function version(): string {
  return call<{ version: string }>({ op: "version" }).version;
}

export function bindIou(a: Vertex[], b: Vertex[]): number {
  return call<{ iou: number }>({ op: "iou", a, b }).iou;
}

export function bindSerialize(
  detections: BoundDetection[],
  categories: string[],
  imageWidth: number,
  imageHeight: number,
): string {
  return call<{ text: string }>({
    op: "serialize",
    detections,
    categories,
    image_width: imageWidth,
    image_height: imageHeight,
  }).text;
}

export function bindParse(
  text: string,
  categories: string[],
  imageWidth: number,
  imageHeight: number,
): ParseResult {
  return call<ParseResult>({
    op: "parse",
    text,
    categories,
    image_width: imageWidth,
    image_height: imageHeight,
  });
}

export function bindMapNc(
  preds: BoundDetection[],
  gts: BoundDetection[],
  config?: EvalConfigWire,
): MapNcResult {
  return call<MapNcResult>({ op: "map_nc", preds, gts, config });
}

export function bindF1(
  preds: BoundDetection[],
  gts: BoundDetection[],
  iouThreshold = 0.5,
): F1Result {
  return call<F1Result>({ op: "f1", preds, gts, iou_threshold: iouThreshold });
}

export function bindSweep(
  preds: BoundDetection[],
  gts: BoundDetection[],
  config?: EvalConfigWire,
): SweepResult {
  return call<SweepResult>({ op: "sweep", preds, gts, config });
}
