/**
 * Cross-implementation conformance: every vector in
 * fixtures/reference_vectors.json was recorded from the pipeline's own
 * mock backends; the dummy stages here must reproduce them exactly.
 */

import { test } from "node:test";
import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { Lcg } from "../src/rng.js";
import { dummyClassification, dummyMasks, layoutBoxes, maskArea } from "../src/dummy.js";
import { rasterizeBox, tightBbox } from "../src/rle.js";

const vectors = JSON.parse(
  readFileSync(fileURLToPath(new URL("../../fixtures/reference_vectors.json", import.meta.url)), "utf-8"),
);

test("lcg reproduces the reference draw sequences", () => {
  for (const { seed, draws } of vectors.lcg) {
    const rng = new Lcg(seed);
    const got = [rng.state];
    for (let i = 1; i < draws.length; i++) got.push(rng.next());
    assert.deepEqual(got, draws);
  }
});

test("layouts match the reference boxes", () => {
  for (const { seed, width, height, boxes } of vectors.layouts) {
    assert.deepEqual(layoutBoxes(seed, width, height), boxes, `seed ${seed} ${width}x${height}`);
  }
});

test("segmentation masks match the reference, including the odd-seed inset", () => {
  for (const { seed, width, height, prompts, masks } of vectors.segment) {
    assert.deepEqual(dummyMasks(seed, width, height, prompts), masks);
  }
});

test("classification matches the reference outputs", () => {
  for (const { seed, mask, expected } of vectors.classify) {
    const got = dummyClassification(seed, mask.counts, mask.width);
    assert.deepEqual(got, expected);
  }
});

test("rasterize produces canonical runs that cover the box area", () => {
  const counts = rasterizeBox(2, 3, 5, 7, 10, 10);
  assert.ok(counts);
  assert.equal(maskArea(counts!), 12);
  assert.equal(counts![0], 32);
  assert.equal(counts!.reduce((a, b) => a + b, 0), 100);
  assert.deepEqual(tightBbox(counts!, 10), [2, 3, 5, 7]);
  assert.equal(rasterizeBox(-5, -5, 0, 0, 10, 10), null);
  const full = rasterizeBox(0, 0, 8, 8, 8, 8);
  assert.deepEqual(full, [0, 64]);
});

test("tight bbox handles wrap-around and empty masks", () => {
  // run spanning two rows covers the full width
  assert.deepEqual(tightBbox([3, 10, 3], 4), [0, 0, 4, 4]);
  assert.equal(tightBbox([16], 4), null);
  assert.deepEqual(tightBbox([15, 1], 4), [3, 3, 4, 4]);
});
