// Headless operator console: owns the client session, keeps the overlay in
// sync with incoming masks, gates config edits behind client-side
// validation, and tracks alerts. The DOM layer only draws what this emits.

import { SentinelClient } from "./client.js";
import { DrawBox, ViewTransform, buildOverlay } from "./overlay.js";
import {
  RoiDraft,
  draftToNative,
  validateGrid,
  validateRoi,
  validateThreshold,
} from "./roi.js";
import { AlertEvent, ConfigAckEvent, GridShape, MaskEvent } from "./protocol.js";

export interface AlertEntry {
  i: number;
  pushingCount: number;
  receivedAtMs: number;
}

export class OperatorConsole {
  view: ViewTransform = { scaleX: 1, scaleY: 1, offsetX: 0, offsetY: 0 };
  /** current draw list; rebuilt synchronously on every mask event */
  overlay: DrawBox[] = [];
  readonly alerts: AlertEntry[] = [];
  /** ms from mask receipt to the overlay being ready to draw */
  lastRenderLatencyMs = 0;
  videoTimeS = 0;
  /** edits in flight: the UI disables controls while this is > 0 */
  pendingUpdates = 0;
  lastFieldErrors: Record<string, string> = {};

  constructor(readonly client: SentinelClient) {
    client.on("mask", (event) => this.onMask(event as MaskEvent));
    client.on("alert", (event) => {
      const alert = event as AlertEvent;
      this.alerts.push({
        i: alert.i,
        pushingCount: alert.pushing_count,
        receivedAtMs: Date.now(),
      });
    });
  }

  /** Called by the embedder whenever playback advances. */
  setVideoTime(timeS: number): void {
    this.videoTimeS = timeS;
    this.rebuildOverlay();
  }

  setView(view: ViewTransform): void {
    this.view = view;
    this.rebuildOverlay();
  }

  private onMask(mask: MaskEvent): void {
    const started = performance.now();
    // keep playback aligned with stream time when the embedder does not
    // drive setVideoTime (headless operation)
    this.videoTimeS = Math.max(this.videoTimeS, mask.t);
    this.rebuildOverlay();
    this.lastRenderLatencyMs = performance.now() - started;
  }

  private rebuildOverlay(): void {
    const config = this.client.config;
    const mask = this.client.maskForTime(this.videoTimeS);
    this.overlay = config && mask
      ? buildOverlay(mask, config, this.view, this.videoTimeS)
      : [];
  }

  async commitRoi(draft: RoiDraft,
                  resolution: [number, number]): Promise<ConfigAckEvent> {
    const roi = draftToNative(draft, this.view);
    const errors = validateRoi(roi, resolution);
    if (Object.keys(errors).length) return this.rejectLocally(errors);
    return this.sendUpdate({ roi });
  }

  async commitGrid(grid: GridShape): Promise<ConfigAckEvent> {
    const errors = validateGrid(grid);
    if (Object.keys(errors).length) return this.rejectLocally(errors);
    return this.sendUpdate({ grid });
  }

  async commitThreshold(value: number): Promise<ConfigAckEvent> {
    const errors = validateThreshold(value);
    if (Object.keys(errors).length) return this.rejectLocally(errors);
    return this.sendUpdate({ threshold: value });
  }

  private rejectLocally(errors: Record<string, string>): ConfigAckEvent {
    this.lastFieldErrors = errors;
    return { type: "config_ack", ok: false, errors };
  }

  private async sendUpdate(partial: Parameters<SentinelClient["updateConfig"]>[0],
                           ): Promise<ConfigAckEvent> {
    this.pendingUpdates += 1;
    try {
      const ack = await this.client.updateConfig(partial);
      this.lastFieldErrors = ack.ok ? {} : ack.errors ?? {};
      return ack;
    } finally {
      this.pendingUpdates -= 1;
    }
  }
}
