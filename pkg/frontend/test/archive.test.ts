import assert from "node:assert/strict";
import http from "node:http";
import { AddressInfo } from "node:net";
import { after, before, test } from "node:test";

import { browseArchive } from "../src/archive.js";

// static stub replicating the storage layout contract
const FILES: Record<string, string> = {
  "/cam/index.json": JSON.stringify({
    stream_id: "cam",
    records: ["roi_000001.json", "roi_000003.json", "roi_000002.json"],
  }),
  "/cam/roi_000001.json": JSON.stringify({
    i: 1, t: 0.0, grid: { n: 1, m: 2 }, labels: [true, false],
    rects: [[0, 0, 8, 8], [8, 0, 16, 8]],
  }),
  "/cam/roi_000002.json": JSON.stringify({
    i: 2, t: 2.0, grid: { n: 1, m: 2 }, labels: [false, false],
    rects: [[0, 0, 8, 8], [8, 0, 16, 8]],
  }),
  "/cam/roi_000003.json": JSON.stringify({
    i: 3, t: 4.0, grid: { n: 1, m: 2 }, labels: [false, true],
    rects: [[0, 0, 8, 8], [8, 0, 16, 8]],
  }),
  "/empty/index.json": JSON.stringify({ stream_id: "empty", records: [] }),
};

let server: http.Server;
let base: string;

before(async () => {
  server = http.createServer((req, res) => {
    const body = FILES[req.url ?? ""];
    if (body === undefined) {
      res.writeHead(404);
      res.end();
      return;
    }
    res.writeHead(200, { "Content-Type": "application/json" });
    res.end(body);
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
});

after(() => server.close());

test("gallery lists records in i order with image urls", async () => {
  const items = await browseArchive(base, "cam");
  assert.deepEqual(items.map((x) => x.i), [1, 2, 3]);
  assert.equal(items[0].imageUrl, `${base}/cam/roi_000001.png`);
  assert.deepEqual(items[0].meta.labels, [true, false]);
  assert.equal(items[2].meta.t, 4.0);
});

test("range limits the gallery", async () => {
  const items = await browseArchive(base, "cam", [2, 3]);
  assert.deepEqual(items.map((x) => x.i), [2, 3]);
});

test("empty archive yields an empty gallery", async () => {
  assert.deepEqual(await browseArchive(base, "empty"), []);
});

test("missing stream surfaces the http error", async () => {
  await assert.rejects(() => browseArchive(base, "ghost"), /404/);
});
