// End-to-end against the real annotation service: spawn `push-sentinel
// serve` on ephemeral ports, subscribe over TCP, steer the grid and
// threshold mid-stream, verify the traffic capture (control bytes only),
// and browse the archived blurred keyframes over HTTP.
//
// The service paces the file replay to wall clock (live-camera
// simulation), so the whole 20 s stream stays steerable while these tests
// run in declaration order.

import assert from "node:assert/strict";
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import os from "node:os";
import path from "node:path";
import { after, before, test } from "node:test";

import { browseArchive } from "../src/archive.js";
import { SentinelClient, TcpTransport } from "../src/client.js";
import { OperatorConsole } from "../src/console.js";

const FIXTURE_SCRIPT = `
import sys
import numpy as np
import cv2

out = sys.argv[1]
rng = np.random.default_rng(5)
base = rng.integers(0, 256, (132, 132, 3), dtype=np.uint8)
writer = cv2.VideoWriter(out, cv2.VideoWriter_fourcc(*"MJPG"), 25.0, (132, 132))
assert writer.isOpened()
for k in range(500):
    writer.write(np.roll(base, (3 * k, 2 * k), axis=(0, 1)))
writer.release()
print("fixture ready")
`;

let workdir: string;
let proc: ChildProcess;
let archiveUrl = "";
let transport: TcpTransport;
let client: SentinelClient;
let operator: OperatorConsole;

function configToml(video: string, archive: string): string {
  return `
[source]
mode = "file_replay"
path_or_url = "${video}"

[roi]
top_left = [2, 2]
bottom_right = [130, 130]

[grid]
rows = 2
cols = 2

[estimator]
search_radius = 3
block_size = 5

[classifier]
input_side = 32
threshold = 0.5

[store]
kind = "local"
root = "${archive}"

[server]
listen = "127.0.0.1:0"
`;
}

function run(cmd: string, args: string[]): Promise<void> {
  return new Promise((resolve, reject) => {
    const child = spawn(cmd, args, { stdio: ["ignore", "pipe", "pipe"] });
    let err = "";
    child.stderr?.on("data", (d) => (err += d));
    child.on("exit", (code) =>
      code === 0 ? resolve() : reject(new Error(`${cmd} -> ${code}: ${err}`)));
  });
}

/** Poll until fn() returns a value; reject on timeout. */
function waitFor<T>(fn: () => T | undefined, what: string,
                    timeoutMs = 60_000): Promise<T> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const timer = setInterval(() => {
      const value = fn();
      if (value !== undefined) {
        clearInterval(timer);
        resolve(value);
      } else if (Date.now() - started > timeoutMs) {
        clearInterval(timer);
        reject(new Error(`timed out waiting for ${what}`));
      }
    }, 20);
  });
}

const sessionOver = () => client.state === "ended" || client.state === "closed";

before(async () => {
  workdir = mkdtempSync(path.join(os.tmpdir(), "sentinel-itest-"));
  const video = path.join(workdir, "entrance.avi");
  const archive = path.join(workdir, "archive");
  writeFileSync(path.join(workdir, "fixture.py"), FIXTURE_SCRIPT);
  await run("python3", [path.join(workdir, "fixture.py"), video]);
  writeFileSync(path.join(workdir, "config.toml"), configToml(video, archive));

  proc = spawn("python3", ["-u", "-m", "push_sentinel.cli", "serve",
                           "--config", path.join(workdir, "config.toml"),
                           "--archive-http", "0"],
               { stdio: ["ignore", "pipe", "pipe"] });

  const ports = await new Promise<{ event: number; archive: string }>(
    (resolve, reject) => {
      let out = "";
      let err = "";
      const timer = setTimeout(
        () => reject(new Error(`service did not start: ${out}\n${err}`)), 30_000);
      proc.stderr!.on("data", (chunk) => (err += chunk.toString()));
      proc.stdout!.on("data", (chunk) => {
        out += chunk.toString();
        const ev = /event server listening on [\d.]+:(\d+)/.exec(out);
        const ar = /archive browser on (http:\/\/[\d.]+:\d+)\//.exec(out);
        if (ev && ar) {
          clearTimeout(timer);
          resolve({ event: parseInt(ev[1], 10), archive: ar[1] });
        }
      });
      proc.on("exit", (code) =>
        reject(new Error(`service exited early (${code}): ${out}\n${err}`)));
    });
  archiveUrl = ports.archive;

  transport = await TcpTransport.connect("127.0.0.1", ports.event);
  client = new SentinelClient(transport);
  operator = new OperatorConsole(client);
}, { timeout: 120_000 });

after(() => {
  client?.close();
  proc?.kill();
});

test("subscribe delivers the config snapshot before any mask",
     { timeout: 120_000 }, async () => {
  client.subscribe("entrance");
  const mask = await waitFor(() => client.masks[0], "first mask");
  assert.ok(client.config, "config must arrive before masks");
  assert.deepEqual(client.config!.grid, { n: 2, m: 2 });
  assert.equal(client.config!.interval_s, 2.0);
  assert.equal(mask.labels.length, 4);
  assert.equal(mask.status, "ok");
});

test("mask overlay renders within one keyframe interval of receipt",
     { timeout: 120_000 }, async () => {
  assert.ok(operator.overlay.length > 0, "overlay built from live mask");
  assert.ok(operator.lastRenderLatencyMs < client.config!.interval_s * 1000,
            `${operator.lastRenderLatencyMs}ms exceeds one interval`);
});

test("grid edit round-trips and alters subsequent masks",
     { timeout: 120_000 }, async () => {
  const ack = await operator.commitGrid({ n: 1, m: 3 });
  assert.equal(ack.ok, true);
  const boundary = ack.effective_i ?? 1;
  const mask = await waitFor(
    () => client.masks.find((m) => m.i >= boundary),
    `mask at or after segment ${boundary}`);
  assert.equal(mask.labels.length, 3);
});

test("threshold edit flips subsequent labels", { timeout: 120_000 }, async () => {
  // threshold 0 brackets every delta the classifier can emit
  const ack = await operator.commitThreshold(0.0);
  assert.equal(ack.ok, true);
  const boundary = ack.effective_i ?? 1;
  const mask = await waitFor(
    () => client.masks.find((m) => m.i >= boundary),
    `post-threshold mask >= ${boundary}`);
  assert.ok(mask.labels.every(Boolean), "threshold 0 labels everything pushing");
});

test("roi edit round-trips and shrinks subsequent mask extents",
     { timeout: 120_000 }, async () => {
  // native 64x64 rectangle; at half-resolution processing the mask extent
  // drops from 64 px to 32 px
  operator.setView({ scaleX: 1, scaleY: 1, offsetX: 0, offsetY: 0 });
  const ack = await operator.commitRoi({ x0: 2, y0: 2, x1: 66, y1: 66 },
                                       [132, 132]);
  assert.equal(ack.ok, true);
  const boundary = ack.effective_i ?? 1;
  const mask = await waitFor(
    () => client.masks.find((m) => m.i >= boundary),
    `post-roi mask >= ${boundary}`);
  const extent = Math.max(...mask.rects.map((r) => r[2]));
  assert.equal(extent, 32);
});

test("invalid edits come back with field-level errors",
     { timeout: 120_000 }, async () => {
  const ack = await client.updateConfig({
    roi: { top_left: [0, 0], bottom_right: [5000, 5000] },
  });
  assert.equal(ack.ok, false);
  assert.match(ack.errors!.roi, /exceeds/);
});

test("traffic capture: only control messages ever go upstream",
     { timeout: 120_000 }, async () => {
  await waitFor(() => (sessionOver() ? true : undefined), "stream end");
  // every uploaded byte is accounted for by recorded JSON control lines
  const recorded = transport.sentLines.join("");
  assert.equal(transport.bytesSent, Buffer.byteLength(recorded, "utf8"));
  for (const line of transport.sentLines) {
    const msg = JSON.parse(line);
    assert.ok(["subscribe", "update_config"].includes(msg.type));
  }
  // a single 132x132 RGB frame is ~52 kB; control traffic is tiny
  assert.ok(transport.bytesSent < 1024,
            `uploaded ${transport.bytesSent} bytes, expected < 1 kB`);
  assert.ok(transport.bytesReceived > transport.bytesSent,
            "masks flow downstream only");
});

test("archived blurred keyframes browse over http in i order",
     { timeout: 120_000 }, async () => {
  await waitFor(() => (sessionOver() ? true : undefined), "stream end");
  const items = await browseArchive(archiveUrl, "entrance");
  assert.ok(items.length >= 2, `expected >= 2 records, got ${items.length}`);
  assert.deepEqual(items.map((x) => x.i),
                   [...items.map((x) => x.i)].sort((a, b) => a - b));
  const first = items[0];
  assert.equal(first.meta.i, first.i);
  assert.ok(Array.isArray(first.meta.labels));
  assert.equal(first.meta.rects.length, first.meta.labels.length);
  const img = await fetch(first.imageUrl);
  assert.equal(img.status, 200);
  const bytes = new Uint8Array(await img.arrayBuffer());
  // PNG magic: the archived object is a real image
  assert.deepEqual(Array.from(bytes.slice(0, 4)), [0x89, 0x50, 0x4e, 0x47]);
});
