import assert from "node:assert/strict";
import { test } from "node:test";

import { NdjsonDecoder, encodeMessage } from "../src/protocol.js";

test("encodeMessage appends exactly one newline", () => {
  const line = encodeMessage({ type: "subscribe", stream_id: "cam" });
  assert.equal(line, '{"type":"subscribe","stream_id":"cam"}\n');
});

test("decoder reassembles events split across chunks", () => {
  const decoder = new NdjsonDecoder();
  const full = '{"type":"alert","i":3,"pushing_count":2}\n';
  assert.deepEqual(decoder.push(full.slice(0, 10)), []);
  const events = decoder.push(full.slice(10));
  assert.equal(events.length, 1);
  assert.deepEqual(events[0], { type: "alert", i: 3, pushing_count: 2 });
});

test("decoder yields multiple events from one chunk", () => {
  const decoder = new NdjsonDecoder();
  const events = decoder.push(
    '{"type":"end","reason":"a"}\n{"type":"end","reason":"b"}\n');
  assert.deepEqual(events.map((e) => (e as { reason: string }).reason),
                   ["a", "b"]);
});

test("decoder skips blank lines and keeps trailing partials", () => {
  const decoder = new NdjsonDecoder();
  assert.deepEqual(decoder.push('\n\n{"type":"end","reason":"x"}\n{"ty'), [
    { type: "end", reason: "x" },
  ]);
  assert.deepEqual(decoder.push('pe":"end","reason":"y"}\n'), [
    { type: "end", reason: "y" },
  ]);
});

test("decoder accepts binary chunks", () => {
  const decoder = new NdjsonDecoder();
  const events = decoder.push(
    new TextEncoder().encode('{"type":"end","reason":"bin"}\n'));
  assert.deepEqual(events, [{ type: "end", reason: "bin" }]);
});
