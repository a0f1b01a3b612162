// Overlay geometry: mask rects arrive in the server's processing-resolution
// ROI coordinates; the console maps them onto its own video rendering.
//
// Chain per axis: processing ROI px -> native px (the mask tiles the whole
// ROI, so the native ROI extent over the mask extent gives the factor) ->
// display px through the view transform. Corners move through one affine
// map per axis, so boxes stay boxes and resizing the view rescales them
// exactly.

import { ConfigEvent, MaskEvent, Rect } from "./protocol.js";

export const PUSHING_COLOR = "#ff0000";
export const NON_PUSHING_COLOR = "#00cc00";
export const DIM_ALPHA = 0.35;

/** native video px -> display px */
export interface ViewTransform {
  scaleX: number;
  scaleY: number;
  offsetX: number;
  offsetY: number;
}

export interface DrawBox {
  x: number;
  y: number;
  width: number;
  height: number;
  color: string;
  alpha: number; // 1 = fresh, DIM_ALPHA = stale
  lineWidth: number;
}

export function maskExtent(rects: Rect[]): [number, number] {
  let w = 0;
  let h = 0;
  for (const [, , x1, y1] of rects) {
    w = Math.max(w, x1);
    h = Math.max(h, y1);
  }
  return [w, h];
}

export function rectToNative(rect: Rect, config: ConfigEvent,
                             extent: [number, number]): Rect {
  const [tlx, tly] = config.roi.top_left;
  const roiW = config.roi.bottom_right[0] - tlx;
  const roiH = config.roi.bottom_right[1] - tly;
  const fx = roiW / extent[0];
  const fy = roiH / extent[1];
  return [tlx + rect[0] * fx, tly + rect[1] * fy,
          tlx + rect[2] * fx, tly + rect[3] * fy];
}

export function isStale(mask: MaskEvent, videoTimeS: number,
                        intervalS: number): boolean {
  return videoTimeS - mask.t > 2 * intervalS;
}

/**
 * Draw commands for one mask. videoTimeS is the client's current playback
 * time; masks older than one segment beyond their window render dimmed.
 */
export function buildOverlay(mask: MaskEvent, config: ConfigEvent,
                             view: ViewTransform, videoTimeS: number,
                             lineWidth = 3): DrawBox[] {
  if (mask.rects.length === 0) return [];
  const extent = maskExtent(mask.rects);
  if (extent[0] <= 0 || extent[1] <= 0) return [];
  const alpha = isStale(mask, videoTimeS, config.interval_s) ? DIM_ALPHA : 1;
  return mask.rects.map((rect, idx) => {
    const [nx0, ny0, nx1, ny1] = rectToNative(rect, config, extent);
    const x = nx0 * view.scaleX + view.offsetX;
    const y = ny0 * view.scaleY + view.offsetY;
    return {
      x,
      y,
      width: (nx1 - nx0) * view.scaleX,
      height: (ny1 - ny0) * view.scaleY,
      color: mask.labels[idx] ? PUSHING_COLOR : NON_PUSHING_COLOR,
      alpha,
      lineWidth,
    };
  });
}

/** Tiny RGB rasterizer for golden tests: outlines only, like the service. */
export function rasterize(boxes: DrawBox[], width: number,
                          height: number): Uint8Array {
  const raster = new Uint8Array(width * height * 3);
  const put = (x: number, y: number, rgb: [number, number, number]) => {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const at = (y * width + x) * 3;
    raster[at] = rgb[0];
    raster[at + 1] = rgb[1];
    raster[at + 2] = rgb[2];
  };
  for (const box of boxes) {
    const rgb = parseColor(box.color);
    const x0 = Math.round(box.x);
    const y0 = Math.round(box.y);
    const x1 = Math.round(box.x + box.width);
    const y1 = Math.round(box.y + box.height);
    const lw = box.lineWidth;
    for (let y = y0; y < y1; y++) {
      for (let x = x0; x < x1; x++) {
        const onEdge = x < x0 + lw || x >= x1 - lw || y < y0 + lw || y >= y1 - lw;
        if (onEdge) put(x, y, rgb);
      }
    }
  }
  return raster;
}

export function parseColor(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}
