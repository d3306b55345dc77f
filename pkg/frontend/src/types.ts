/**
 * Wire types mirroring the analysis service JSON. The UI never computes
 * analysis results itself; every number shown on screen traces back to a
 * field defined here.
 */

export interface Point {
  x: number;
  y: number;
}

export interface RoiJson {
  x0: number;
  y0: number;
  width: number;
  height: number;
}

export interface MotionVectorJson {
  origin: Point;
  raw: Point;
  camera: Point;
  residual: Point;
  magnitude: number;
}

export interface MotionFieldJson {
  frame_a: number | null;
  frame_b: number | null;
  ts: number | null;
  vectors: MotionVectorJson[];
}

export interface HomographyJson {
  matrix: number[];
  convention: string;
}

export interface FieldStatsJson {
  count: number;
  mean_magnitude: number | null;
  median_magnitude: number | null;
  max_magnitude: number | null;
  mean_direction_deg: number | null;
}

export interface AnalysisParamsJson {
  roi?: RoiJson | null;
  detector?: Record<string, number>;
  tracker?: Record<string, number>;
  robust_fit?: Record<string, number>;
  ts?: number;
  arrow?: { scale?: number; color?: number[]; head_length?: number; line_width?: number };
  seed?: number;
  fb_filter?: boolean;
  brightness_gain?: number;
}

export interface AnalysisResponse {
  params: Required<AnalysisParamsJson>;
  frames: {
    a: number;
    b: number;
    timestamp_a: number;
    timestamp_b: number;
    fps: number;
  };
  counts: {
    detected: number;
    tracked: number;
    lost: number;
    rejected_fb: number;
    inliers: number;
    dropped: number;
  };
  homography: HomographyJson;
  field: MotionFieldJson;
  filtered_field: MotionFieldJson;
  stats: FieldStatsJson;
  agreement: number | null;
  artifacts: Record<string, string>;
  artifact_urls: Record<string, string>;
}

export interface PlateauJson {
  ts_min: number;
  ts_max: number;
  count: number;
}

export interface SweepResponse {
  ts_grid: number[];
  counts: number[];
  plateaus: PlateauJson[];
  recommended: PlateauJson | null;
  sweep?: unknown;
}

export interface SessionInfo {
  id: string;
  frame_count: number;
  width: number;
  height: number;
  fps: number;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export type ViewMode = "overlay" | "diff" | "side-by-side";
