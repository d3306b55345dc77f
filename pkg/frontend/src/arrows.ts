/**
 * Client-side arrow geometry and rendering from motion-field JSON.
 *
 * The endpoint math is the presentation contract: tip = origin +
 * scale * residual, exactly, so the scale slider can re-render instantly
 * without another server round trip (the server PNG stays the canonical
 * artifact).
 */

import type { MotionFieldJson } from "./types.js";

export interface ArrowSegment {
  start: [number, number];
  tip: [number, number];
}

export function arrowEndpoints(field: MotionFieldJson, scale: number): ArrowSegment[] {
  return field.vectors.map((v) => ({
    start: [v.origin.x, v.origin.y],
    tip: [v.origin.x + scale * v.residual.x, v.origin.y + scale * v.residual.y],
  }));
}

/** The subset of CanvasRenderingContext2D the renderer needs; tests pass a
 * recording stub. */
export interface StrokeSurface {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
}

const HEAD_SWEEP = (150 * Math.PI) / 180;

export function drawArrows(
  ctx: StrokeSurface,
  field: MotionFieldJson,
  scale: number,
  color = "#e61e1e",
  headLength = 6,
  lineWidth = 1.5,
): number {
  ctx.strokeStyle = color;
  ctx.lineWidth = lineWidth;
  let drawn = 0;
  for (const seg of arrowEndpoints(field, scale)) {
    const [sx, sy] = seg.start;
    const [tx, ty] = seg.tip;
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(tx, ty);
    const dx = tx - sx;
    const dy = ty - sy;
    const len = Math.hypot(dx, dy);
    if (len >= 0.5) {
      const ux = dx / len;
      const uy = dy / len;
      const head = Math.min(headLength, len);
      for (const side of [HEAD_SWEEP, -HEAD_SWEEP]) {
        const c = Math.cos(side);
        const s = Math.sin(side);
        ctx.moveTo(tx, ty);
        ctx.lineTo(tx + head * (ux * c - uy * s), ty + head * (ux * s + uy * c));
      }
    }
    ctx.stroke();
    drawn += 1;
  }
  return drawn;
}
