import assert from "node:assert/strict";
import { test } from "node:test";

import {
  draftToNative,
  normalizeDraft,
  validateGrid,
  validateRoi,
  validateThreshold,
} from "../src/roi.js";

test("drafts normalize regardless of drag direction", () => {
  assert.deepEqual(normalizeDraft({ x0: 50, y0: 40, x1: 10, y1: 8 }),
                   { x0: 10, y0: 8, x1: 50, y1: 40 });
});

test("display coordinates invert through the view transform", () => {
  const view = { scaleX: 0.5, scaleY: 0.5, offsetX: 10, offsetY: 20 };
  const roi = draftToNative({ x0: 11, y0: 21, x1: 75, y1: 85 }, view);
  assert.deepEqual(roi, { top_left: [2, 2], bottom_right: [130, 130] });
});

test("valid roi passes", () => {
  const roi = { top_left: [2, 2] as [number, number],
                bottom_right: [130, 130] as [number, number] };
  assert.deepEqual(validateRoi(roi, [132, 132]), {});
});

test("zero-area and out-of-frame rois are rejected client-side", () => {
  const flat = { top_left: [5, 5] as [number, number],
                 bottom_right: [5, 30] as [number, number] };
  assert.ok(validateRoi(flat, [100, 100]).roi);
  const oob = { top_left: [0, 0] as [number, number],
                bottom_right: [101, 50] as [number, number] };
  assert.match(validateRoi(oob, [100, 100]).roi, /exceeds/);
});

test("grid 0x3 is rejected before anything is sent", () => {
  assert.ok(validateGrid({ n: 0, m: 3 }).grid);
  assert.ok(validateGrid({ n: 1.5, m: 3 }).grid);
  assert.deepEqual(validateGrid({ n: 2, m: 4 }), {});
});

test("threshold outside [0,1] is rejected", () => {
  assert.ok(validateThreshold(1.5).threshold);
  assert.ok(validateThreshold(-0.1).threshold);
  assert.ok(validateThreshold(NaN).threshold);
  assert.deepEqual(validateThreshold(0.6), {});
});
