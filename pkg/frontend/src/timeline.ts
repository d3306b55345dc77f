/** Frame index <-> advisory timeline conversion (index / fps, 1-indexed). */

export function frameTimestamp(index: number, fps: number): number {
  if (!Number.isInteger(index) || index < 1) {
    throw new RangeError(`frame index must be a positive integer, got ${index}`);
  }
  if (!(fps > 0)) {
    throw new RangeError(`fps must be > 0, got ${fps}`);
  }
  return index / fps;
}

export function formatSeconds(t: number): string {
  return `${t.toFixed(2)} s`;
}

export function isValidIndex(index: number, frameCount: number): boolean {
  return Number.isInteger(index) && index >= 1 && index <= frameCount;
}
