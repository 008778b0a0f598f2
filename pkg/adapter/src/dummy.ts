/**
 * Deterministic dummy stages: seeded box layout, box-as-mask segmentation,
 * position-hashed classification.
 *
 * Every quantity is derived through integer arithmetic from the seed, so a
 * pipeline driving this process gets byte-identical values to its own
 * in-process mocks for the same seed.
 */

import { Lcg } from "./rng.js";
import { maskArea, rasterizeBox, tightBbox } from "./rle.js";
import { TAXONOMY } from "./taxonomy.js";

const SEED_SMALL_MOD = 65521; // keeps hash products well under 2^53

export type LayoutBox = [number, number, number, number, number]; // x0,y0,x1,y1,conf%

/** Seeded 3x3 cell layout; one presence draw per cell, five more when present. */
export function layoutBoxes(seed: number, width: number, height: number): LayoutBox[] {
  const rng = new Lcg(seed);
  const cellW = Math.max(1, Math.floor(width / 3));
  const cellH = Math.max(1, Math.floor(height / 3));
  const boxes: LayoutBox[] = [];
  for (let gy = 0; gy < 3; gy++) {
    for (let gx = 0; gx < 3; gx++) {
      if (rng.rand(100) >= 60) continue;
      const bw = Math.max(2, Math.floor((cellW * (40 + rng.rand(50))) / 100));
      const bh = Math.max(2, Math.floor((cellH * (40 + rng.rand(50))) / 100));
      const spanX = Math.max(1, cellW - bw + Math.max(1, Math.floor(cellW / 4)));
      const spanY = Math.max(1, cellH - bh + Math.max(1, Math.floor(cellH / 4)));
      const x0 = gx * cellW + rng.rand(spanX);
      const y0 = gy * cellH + rng.rand(spanY);
      const x1 = Math.min(width, x0 + bw);
      const y1 = Math.min(height, y0 + bh);
      const conf = 50 + rng.rand(50);
      if (x1 - x0 >= 2 && y1 - y0 >= 2) boxes.push([x0, y0, x1, y1, conf]);
    }
  }
  return boxes;
}

export interface DetectionEntry {
  box: [number, number, number, number];
  confidence: number;
}

export function dummyDetections(seed: number, width: number, height: number): DetectionEntry[] {
  return layoutBoxes(seed, width, height).map(([x0, y0, x1, y1, conf]) => ({
    box: [x0, y0, x1, y1],
    confidence: conf / 100,
  }));
}

export type MaskEntry =
  | { width: number; height: number; counts: number[] }
  | { error: { code: string; message: string } };

/** One mask per prompt: the rasterized box, inset 1px/side on odd seeds. */
export function dummyMasks(
  seed: number,
  width: number,
  height: number,
  prompts: number[][],
): MaskEntry[] {
  const inset = seed % 2 === 1;
  const entries: MaskEntry[] = [];
  prompts.forEach((prompt, i) => {
    let [x0, y0, x1, y1] = prompt;
    const inBounds = 0 <= x0 && x0 < x1 && x1 <= width && 0 <= y0 && y0 < y1 && y1 <= height;
    if (!inBounds) {
      entries.push({ error: { code: "out_of_bounds", message: `prompt ${i} out of bounds` } });
      return;
    }
    if (inset && x1 - x0 > 2 && y1 - y0 > 2) {
      x0 += 1;
      y0 += 1;
      x1 -= 1;
      y1 -= 1;
    }
    const counts = rasterizeBox(x0, y0, x1, y1, width, height);
    if (counts === null) {
      // unreachable after the bounds check; keep the protocol shape anyway
      entries.push({ error: { code: "out_of_bounds", message: `prompt ${i} out of bounds` } });
      return;
    }
    entries.push({ width, height, counts });
  });
  return entries;
}

export interface ClassificationResult {
  genus: string;
  confidence: number;
  alternates: { genus: string; confidence: number }[];
}

/** Genus picked by hashing the tight-box center into the taxonomy. */
export function dummyClassification(
  seed: number,
  counts: number[],
  width: number,
): ClassificationResult | { error: { code: string; message: string } } {
  const box = tightBbox(counts, width);
  if (box === null) {
    return { error: { code: "empty_mask", message: "mask has no foreground" } };
  }
  const cx = Math.floor((box[0] + box[2]) / 2);
  const cy = Math.floor((box[1] + box[3]) / 2);
  const s = seed % SEED_SMALL_MOD;
  const n = TAXONOMY.length;
  const idx = ((cx * 48271 + cy * 69621 + s * 8191) % 1000003) % n;
  const conf = 55 + ((cx * 31 + cy * 17 + s * 7) % 40);
  const idx2 = (idx + 1 + ((cx + cy + s) % 7)) % n;
  const conf2 = 30 + ((cx * 13 + cy * 29 + s * 3) % 25);
  const idx3 = (idx2 + 1 + ((cx * 3 + cy) % 5)) % n;
  const conf3 = 10 + ((cx * 7 + cy * 11 + s) % 20);
  return {
    genus: TAXONOMY[idx],
    confidence: conf / 100,
    alternates: [
      { genus: TAXONOMY[idx2], confidence: conf2 / 100 },
      { genus: TAXONOMY[idx3], confidence: conf3 / 100 },
    ],
  };
}

export { maskArea };
