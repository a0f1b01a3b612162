// Protocol client. The transport is pluggable so tests can drive the
// session without sockets; TcpTransport talks to the service directly and
// keeps byte counters, which double as the traffic capture: everything the
// console ever uploads is a recorded control line.

import net from "node:net";

import {
  ClientMessage,
  ConfigAckEvent,
  ConfigEvent,
  EndEvent,
  MaskEvent,
  NdjsonDecoder,
  ServerEvent,
  encodeMessage,
} from "./protocol.js";

export interface Transport {
  send(line: string): void;
  close(): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
}

export class TcpTransport implements Transport {
  bytesSent = 0;
  bytesReceived = 0;
  readonly sentLines: string[] = [];
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  private constructor(private socket: net.Socket) {
    let buffer = "";
    socket.on("data", (chunk) => {
      this.bytesReceived += chunk.length;
      buffer += chunk.toString("utf8");
      let idx;
      while ((idx = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 1);
        if (line.trim()) this.lineCb?.(line);
      }
    });
    socket.on("close", () => this.closeCb?.());
    socket.on("error", () => socket.destroy());
  }

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      socket.once("connect", () => resolve(new TcpTransport(socket)));
      socket.once("error", reject);
    });
  }

  send(line: string): void {
    this.bytesSent += Buffer.byteLength(line, "utf8");
    this.sentLines.push(line);
    this.socket.write(line);
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }
}

export type SessionState = "idle" | "subscribed" | "ended" | "closed";

type EventName = ServerEvent["type"];
type Listener = (event: ServerEvent) => void;

export class SentinelClient {
  state: SessionState = "idle";
  config: ConfigEvent | null = null;
  endReason: string | null = null;
  /** ring buffer of the most recent masks, oldest first */
  readonly masks: MaskEvent[] = [];

  private decoder = new NdjsonDecoder();
  private listeners = new Map<EventName, Listener[]>();
  private pendingAcks: Array<(ack: ConfigAckEvent) => void> = [];

  constructor(private transport: Transport, private maskBuffer = 32) {
    transport.onLine((line) => {
      for (const event of this.decoder.push(line + "\n")) {
        this.dispatch(event);
      }
    });
    transport.onClose(() => {
      if (this.state !== "ended") this.state = "closed";
      // settle in-flight edits so callers never hang on a dead connection
      for (const resolve of this.pendingAcks.splice(0)) {
        resolve({ type: "config_ack", ok: false,
                  errors: { connection: "connection closed" } });
      }
    });
  }

  on(name: EventName, cb: Listener): void {
    const list = this.listeners.get(name) ?? [];
    list.push(cb);
    this.listeners.set(name, list);
  }

  subscribe(streamId: string): void {
    this.send({ type: "subscribe", stream_id: streamId });
    this.state = "subscribed";
  }

  /** Resolves with the server's config_ack; acks arrive in request order. */
  updateConfig(partial: Omit<ClientMessage & { type: "update_config" }, "type">,
               ): Promise<ConfigAckEvent> {
    return new Promise((resolve) => {
      this.pendingAcks.push(resolve);
      this.send({ type: "update_config", ...partial });
    });
  }

  /** Newest mask that covers the given playback time, if any. */
  maskForTime(videoTimeS: number): MaskEvent | null {
    for (let k = this.masks.length - 1; k >= 0; k--) {
      if (this.masks[k].t <= videoTimeS) return this.masks[k];
    }
    return null;
  }

  close(): void {
    this.transport.close();
    this.state = "closed";
  }

  private send(msg: ClientMessage): void {
    this.transport.send(encodeMessage(msg));
  }

  private dispatch(event: ServerEvent): void {
    switch (event.type) {
      case "config":
        this.config = event;
        break;
      case "mask":
        this.masks.push(event);
        if (this.masks.length > this.maskBuffer) this.masks.shift();
        break;
      case "config_ack":
        this.pendingAcks.shift()?.(event);
        break;
      case "end":
        this.state = "ended";
        this.endReason = (event as EndEvent).reason;
        break;
    }
    for (const cb of this.listeners.get(event.type) ?? []) cb(event);
  }
}
