// Wire protocol of the annotation service: newline-delimited JSON events
// over a persistent connection. Only control messages ever flow client to
// server; video pixels stay on the client.

export interface RoiCoords {
  top_left: [number, number];
  bottom_right: [number, number];
}

export interface GridShape {
  n: number;
  m: number;
}

export interface ConfigEvent {
  type: "config";
  stream_id: string;
  roi: RoiCoords;
  grid: GridShape;
  threshold: number;
  interval_s: number;
}

export interface MaskTimings {
  descriptor_s: number;
  detect_s: number;
  total_s: number;
}

export type Rect = [number, number, number, number]; // x0, y0, x1, y1

export interface MaskEvent {
  type: "mask";
  i: number;
  t: number;
  labels: boolean[];
  rects: Rect[];
  timings: MaskTimings;
  status: "ok" | "dropped_deadline" | "error";
}

export interface AlertEvent {
  type: "alert";
  i: number;
  pushing_count: number;
}

export interface ConfigAckEvent {
  type: "config_ack";
  ok: boolean;
  effective_i?: number;
  errors?: Record<string, string>;
}

export interface EndEvent {
  type: "end";
  reason: string;
}

export interface ServerErrorEvent {
  type: "error";
  reason: string;
}

export type ServerEvent =
  | ConfigEvent
  | MaskEvent
  | AlertEvent
  | ConfigAckEvent
  | EndEvent
  | ServerErrorEvent;

export interface SubscribeMessage {
  type: "subscribe";
  stream_id: string;
}

export interface UpdateConfigMessage {
  type: "update_config";
  roi?: RoiCoords;
  grid?: GridShape;
  threshold?: number;
}

export type ClientMessage = SubscribeMessage | UpdateConfigMessage;

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg) + "\n";
}

/** Reassembles NDJSON events from arbitrary transport chunking. */
export class NdjsonDecoder {
  private buffer = "";

  push(chunk: string | Uint8Array): ServerEvent[] {
    this.buffer += typeof chunk === "string"
      ? chunk
      : new TextDecoder().decode(chunk);
    const events: ServerEvent[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (!line) continue;
      events.push(JSON.parse(line) as ServerEvent);
    }
    return events;
  }
}
