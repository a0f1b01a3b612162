// Terminal operator console:
//   node dist/src/main.js <host:port> <stream_id>
// Prints the live config, one line per mask (colored cell blocks), and
// alert banners; exits when the stream ends.

import { SentinelClient, TcpTransport } from "./client.js";
import { OperatorConsole } from "./console.js";
import { AlertEvent, MaskEvent } from "./protocol.js";

const RED = "\x1b[31m";
const GREEN = "\x1b[32m";
const BOLD = "\x1b[1m";
const RESET = "\x1b[0m";

function maskLine(mask: MaskEvent): string {
  const cells = mask.labels
    .map((pushing) => (pushing ? `${RED}#${RESET}` : `${GREEN}.${RESET}`))
    .join("");
  const ms = (mask.timings.total_s * 1000).toFixed(0);
  return `mask i=${mask.i} t=${mask.t.toFixed(1)}s [${cells}] ` +
    `${mask.status} (${ms}ms)`;
}

async function main(): Promise<number> {
  const [addr, streamId] = process.argv.slice(2);
  if (!addr || !streamId) {
    console.error("usage: main.js <host:port> <stream_id>");
    return 2;
  }
  const [host, port] = addr.split(":");
  let transport: TcpTransport;
  try {
    transport = await TcpTransport.connect(host, parseInt(port, 10));
  } catch (err) {
    console.error(`cannot reach service at ${addr}:`,
                  err instanceof Error ? err.message : err);
    return 1;
  }
  const client = new SentinelClient(transport);
  const operator = new OperatorConsole(client);

  client.on("config", (event) => console.log("config:", JSON.stringify(event)));
  client.on("mask", (event) => console.log(maskLine(event as MaskEvent)));
  client.on("alert", (event) => {
    const alert = event as AlertEvent;
    console.log(`${BOLD}${RED}ALERT i=${alert.i}: ` +
      `${alert.pushing_count} pushing patch(es)${RESET}`);
  });

  client.subscribe(streamId);
  await new Promise<void>((resolve) => {
    client.on("end", () => resolve());
    transport.onClose(() => resolve());
  });
  console.log(`stream ended (${client.endReason ?? "connection closed"}); ` +
    `${operator.alerts.length} alerts, uploaded ${transport.bytesSent} bytes ` +
    "of control messages, zero video bytes");
  client.close();
  return 0;
}

main().then((code) => process.exit(code));
