/** Click-drag ROI selection: normalize, clamp to frame bounds, reject
 * degenerate drags locally so the service never sees an invalid rectangle. */

import type { RoiJson } from "./types.js";

export interface DragRect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function fullFrameRoi(width: number, height: number): RoiJson {
  return { x0: 0, y0: 0, width, height };
}

/**
 * Turn a raw drag (any corner order, possibly outside the frame) into a
 * valid ROI, or null when the clamped rectangle has no area.
 */
export function clampRoi(drag: DragRect, width: number, height: number): RoiJson | null {
  const left = Math.max(0, Math.min(drag.x0, drag.x1));
  const top = Math.max(0, Math.min(drag.y0, drag.y1));
  const right = Math.min(width, Math.max(drag.x0, drag.x1));
  const bottom = Math.min(height, Math.max(drag.y0, drag.y1));
  const x0 = Math.round(left);
  const y0 = Math.round(top);
  const w = Math.round(right) - x0;
  const h = Math.round(bottom) - y0;
  if (w <= 0 || h <= 0) {
    return null;
  }
  return { x0, y0, width: w, height: h };
}

export function roiEqual(a: RoiJson | null, b: RoiJson | null): boolean {
  if (a === null || b === null) {
    return a === b;
  }
  return a.x0 === b.x0 && a.y0 === b.y0 && a.width === b.width && a.height === b.height;
}
