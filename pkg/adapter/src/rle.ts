/**
 * Run-length mask helpers for the wire format: alternating background/
 * foreground run counts, row-major, leading background count (may be 0).
 */

export interface RleMask {
  width: number;
  height: number;
  counts: number[];
}

export function maskArea(counts: number[]): number {
  let area = 0;
  for (let i = 1; i < counts.length; i += 2) area += counts[i];
  return area;
}

/**
 * Rasterize a half-open box clamped to a width x height grid.
 * Returns null when nothing survives the clamp.
 */
export function rasterizeBox(
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  width: number,
  height: number,
): number[] | null {
  const cx0 = Math.max(0, x0);
  const cy0 = Math.max(0, y0);
  const cx1 = Math.min(width, x1);
  const cy1 = Math.min(height, y1);
  if (cx0 >= cx1 || cy0 >= cy1) return null;
  const rowFg = cx1 - cx0;
  const counts: number[] = [cy0 * width + cx0];
  let trailing: number;
  if (rowFg === width) {
    counts.push((cy1 - cy0) * width);
    trailing = (height - cy1) * width;
  } else {
    const gap = width - rowFg;
    for (let i = 0; i < cy1 - cy0 - 1; i++) {
      counts.push(rowFg);
      counts.push(gap);
    }
    counts.push(rowFg);
    trailing = width - cx1 + (height - cy1) * width;
  }
  if (trailing) counts.push(trailing);
  return counts;
}

/** Tight bounding box [x0, y0, x1, y1] of the foreground, or null if empty. */
export function tightBbox(
  counts: number[],
  width: number,
): [number, number, number, number] | null {
  let rMin = -1;
  let rMax = -1;
  let cMin = -1;
  let cMax = -1;
  let pos = 0;
  let foreground = false;
  for (const c of counts) {
    if (foreground && c > 0) {
      const start = pos;
      const end = pos + c;
      const r0 = Math.floor(start / width);
      const r1 = Math.floor((end - 1) / width);
      if (rMin < 0) rMin = r0;
      if (r1 > rMax) rMax = r1;
      if (r1 > r0) {
        // a run wrapping across rows spans the full column range
        cMin = 0;
        cMax = width - 1;
      } else {
        const c0 = start % width;
        const c1 = (end - 1) % width;
        if (cMin < 0 || c0 < cMin) cMin = c0;
        if (c1 > cMax) cMax = c1;
      }
    }
    pos += c;
    foreground = !foreground;
  }
  if (rMin < 0) return null;
  return [cMin, rMin, cMax + 1, rMax + 1];
}
