/**
 * Threshold-slider data: survivor counts come from the service's sweep
 * response, and the displayed vector subset is selected by the
 * server-reported magnitudes, so slider numbers replay the service exactly.
 */

import type { MotionFieldJson, MotionVectorJson, SweepResponse } from "./types.js";

export class SweepTable {
  readonly tsGrid: number[];
  readonly counts: number[];

  constructor(resp: Pick<SweepResponse, "ts_grid" | "counts">) {
    if (resp.ts_grid.length !== resp.counts.length) {
      throw new Error(
        `sweep grid/count length mismatch: ${resp.ts_grid.length} vs ${resp.counts.length}`,
      );
    }
    this.tsGrid = [...resp.ts_grid];
    this.counts = [...resp.counts];
  }

  /** Survivor count at a grid threshold; throws off-grid (slider positions
   * are the grid, so anything else is a programming error). */
  countAt(ts: number): number {
    const i = this.tsGrid.indexOf(ts);
    if (i < 0) {
      throw new RangeError(`ts ${ts} is not on the sweep grid`);
    }
    return this.counts[i]!;
  }

  get maxCount(): number {
    return this.counts.length ? Math.max(...this.counts) : 0;
  }
}

/** Vectors the slider shows at a cutoff: magnitude >= ts, using the
 * server-provided magnitudes verbatim. */
export function survivors(field: MotionFieldJson, ts: number): MotionVectorJson[] {
  return field.vectors.filter((v) => v.magnitude >= ts);
}

export function survivorField(field: MotionFieldJson, ts: number): MotionFieldJson {
  return {
    frame_a: field.frame_a,
    frame_b: field.frame_b,
    ts,
    vectors: survivors(field, ts),
  };
}
