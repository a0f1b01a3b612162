// Browser glue: draws the console's overlay onto a canvas stacked over the
// operator's own <video> element, and turns pointer drags into ROI drafts.
// Runtime-agnostic logic lives in console.ts / overlay.ts; this file is the
// only one that touches the DOM, for embedders whose transport can reach
// the service (Electron, a local WebSocket-to-TCP bridge, etc.).

import { OperatorConsole } from "./console.js";
import { DrawBox } from "./overlay.js";
import { RoiDraft } from "./roi.js";

export function drawOverlay(ctx: CanvasRenderingContext2D,
                            boxes: DrawBox[]): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (const box of boxes) {
    ctx.globalAlpha = box.alpha;
    ctx.strokeStyle = box.color;
    ctx.lineWidth = box.lineWidth;
    ctx.strokeRect(box.x, box.y, box.width, box.height);
  }
  ctx.globalAlpha = 1;
}

export function drawDraft(ctx: CanvasRenderingContext2D,
                          draft: RoiDraft): void {
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 1;
  ctx.strokeRect(draft.x0, draft.y0, draft.x1 - draft.x0, draft.y1 - draft.y0);
  ctx.setLineDash([]);
}

/** Wire a canvas to the console: redraw on playback ticks and mask events. */
export function attach(consoleState: OperatorConsole, video: HTMLVideoElement,
                       canvas: HTMLCanvasElement): () => void {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas has no 2d context");

  const syncView = () => {
    consoleState.setView({
      scaleX: canvas.width / video.videoWidth,
      scaleY: canvas.height / video.videoHeight,
      offsetX: 0,
      offsetY: 0,
    });
  };

  let raf = 0;
  const tick = () => {
    consoleState.setVideoTime(video.currentTime);
    drawOverlay(ctx, consoleState.overlay);
    raf = requestAnimationFrame(tick);
  };
  video.addEventListener("loadedmetadata", syncView);
  syncView();
  raf = requestAnimationFrame(tick);
  return () => cancelAnimationFrame(raf);
}

/** Pointer-drag ROI tool; calls back with the finished display-space draft. */
export function roiTool(canvas: HTMLCanvasElement,
                        onCommit: (draft: RoiDraft) => void): () => void {
  let draft: RoiDraft | null = null;

  const down = (ev: PointerEvent) => {
    draft = { x0: ev.offsetX, y0: ev.offsetY, x1: ev.offsetX, y1: ev.offsetY };
  };
  const move = (ev: PointerEvent) => {
    if (draft) {
      draft.x1 = ev.offsetX;
      draft.y1 = ev.offsetY;
    }
  };
  const up = () => {
    if (draft && draft.x0 !== draft.x1 && draft.y0 !== draft.y1) {
      onCommit(draft);
    }
    draft = null;
  };

  canvas.addEventListener("pointerdown", down);
  canvas.addEventListener("pointermove", move);
  canvas.addEventListener("pointerup", up);
  return () => {
    canvas.removeEventListener("pointerdown", down);
    canvas.removeEventListener("pointermove", move);
    canvas.removeEventListener("pointerup", up);
  };
}
