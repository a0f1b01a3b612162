// ROI drafting: the operator drags a rectangle in display coordinates;
// committing converts it to native pixel units through the inverse view
// transform and validates it before anything is sent.

import { GridShape, RoiCoords } from "./protocol.js";
import { ViewTransform } from "./overlay.js";

export interface RoiDraft {
  // display coordinates; corners may arrive in any drag order
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function normalizeDraft(draft: RoiDraft): RoiDraft {
  return {
    x0: Math.min(draft.x0, draft.x1),
    y0: Math.min(draft.y0, draft.y1),
    x1: Math.max(draft.x0, draft.x1),
    y1: Math.max(draft.y0, draft.y1),
  };
}

export function draftToNative(draft: RoiDraft, view: ViewTransform): RoiCoords {
  const d = normalizeDraft(draft);
  const toNativeX = (x: number) => Math.round((x - view.offsetX) / view.scaleX);
  const toNativeY = (y: number) => Math.round((y - view.offsetY) / view.scaleY);
  return {
    top_left: [toNativeX(d.x0), toNativeY(d.y0)],
    bottom_right: [toNativeX(d.x1), toNativeY(d.y1)],
  };
}

/** Field errors keyed like the server's config_ack; empty object = valid. */
export function validateRoi(roi: RoiCoords,
                            resolution: [number, number]): Record<string, string> {
  const [x0, y0] = roi.top_left;
  const [x1, y1] = roi.bottom_right;
  if (![x0, y0, x1, y1].every(Number.isInteger)) {
    return { roi: "coordinates must be integer pixel units" };
  }
  if (x0 < 0 || y0 < 0) return { roi: "top-left must be non-negative" };
  if (x1 <= x0 || y1 <= y0) return { roi: "rectangle has no area" };
  if (x1 > resolution[0] || y1 > resolution[1]) {
    return { roi: `exceeds the ${resolution[0]}x${resolution[1]} frame` };
  }
  return {};
}

export function validateGrid(grid: GridShape): Record<string, string> {
  if (!Number.isInteger(grid.n) || !Number.isInteger(grid.m)) {
    return { grid: "rows and columns must be integers" };
  }
  if (grid.n < 1 || grid.m < 1) return { grid: "grid must be at least 1x1" };
  return {};
}

export function validateThreshold(value: number): Record<string, string> {
  if (!Number.isFinite(value) || value < 0 || value > 1) {
    return { threshold: "threshold must lie in [0, 1]" };
  }
  return {};
}
