/** HTTP bridge between the browser page and the TCP service.
 *
 * Browsers cannot open raw TCP, so the page talks to this process:
 * the telemetry stream is forwarded over server-sent events with one
 * TCP connection per stream, and each command POST does a fresh
 * hello/command/ack exchange whose terminal reply becomes the HTTP
 * response. That keeps the bridge stateless: no session table, and
 * closing a page tears down exactly its own connection.
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as path from "node:path";
import { parseArgs } from "node:util";
import { fileURLToPath, pathToFileURL } from "node:url";

import { ConsoleClient } from "./client.js";
import type { ServerMessage } from "./messages.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const STATIC_DIR = path.resolve(HERE, "../static");
const POST_CAP = 64 * 1024;
const COMMAND_TIMEOUT_MS = 3000;

export interface BridgeOptions {
  targetHost: string;
  targetPort: number;
  token?: string;
}

export function splitAddress(text: string): { host: string; port: number } {
  const i = text.lastIndexOf(":");
  const port = Number(text.slice(i + 1));
  if (i < 0 || !Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`bad address ${JSON.stringify(text)}; expected host:port`);
  }
  return { host: text.slice(0, i) || "127.0.0.1", port };
}

function sendJson(res: http.ServerResponse, status: number, body: object): void {
  const text = JSON.stringify(body);
  res.writeHead(status, {
    "content-type": "application/json",
    "content-length": Buffer.byteLength(text),
  });
  res.end(text);
}

function serveFile(res: http.ServerResponse, file: string, type: string): void {
  fs.readFile(file, (err, data) => {
    if (err) {
      sendJson(res, 404, { error: "not found" });
      return;
    }
    res.writeHead(200, { "content-type": type });
    res.end(data);
  });
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let total = 0;
    req.on("data", (chunk: Buffer) => {
      total += chunk.length;
      if (total > POST_CAP) {
        reject(new Error("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

function resolveTarget(
  opts: BridgeOptions,
  addr: string | null,
  token: string | null,
): { host: string; port: number; token?: string } {
  const base = addr
    ? splitAddress(addr)
    : { host: opts.targetHost, port: opts.targetPort };
  return { ...base, token: token ?? opts.token };
}

async function handleStream(
  opts: BridgeOptions,
  url: URL,
  res: http.ServerResponse,
): Promise<void> {
  let client: ConsoleClient;
  try {
    const target = resolveTarget(
      opts,
      url.searchParams.get("addr"),
      url.searchParams.get("token"),
    );
    client = await ConsoleClient.connect(target);
  } catch (exc) {
    sendJson(res, 502, { error: String(exc instanceof Error ? exc.message : exc) });
    return;
  }
  res.writeHead(200, {
    "content-type": "text/event-stream",
    "cache-control": "no-cache",
    connection: "keep-alive",
  });
  const forward = (msg: ServerMessage) => {
    res.write(`data: ${JSON.stringify(msg)}\n\n`);
  };
  forward(client.hello!);
  client.onMessage(forward);
  client.onClose((err) => {
    try {
      res.write(
        `event: close\ndata: ${JSON.stringify({ reason: err ? err.message : "stream ended" })}\n\n`,
      );
    } catch {
      // response already gone
    }
    res.end();
  });
  res.on("close", () => client.close());
  try {
    await client.subscribe("bridge-sub");
  } catch {
    // close event already forwarded
  }
}

async function handleCommand(
  opts: BridgeOptions,
  req: http.IncomingMessage,
  res: http.ServerResponse,
): Promise<void> {
  let body: {
    addr?: string;
    token?: string;
    request_id?: string;
    command?: string;
    params?: { target?: string; value?: number | boolean };
  };
  try {
    body = JSON.parse(await readBody(req));
  } catch (exc) {
    sendJson(res, 400, { error: String(exc instanceof Error ? exc.message : exc) });
    return;
  }
  const requestId = body.request_id ?? "";
  if (!requestId || !body.command || typeof body.params?.target !== "string") {
    sendJson(res, 400, {
      error: "need request_id, command, and params.target",
    });
    return;
  }
  let client: ConsoleClient;
  try {
    client = await ConsoleClient.connect(
      resolveTarget(opts, body.addr ?? null, body.token ?? null),
    );
  } catch (exc) {
    // outcome genuinely unknown only after the command left; a failed
    // connect never delivered it, but the page treats both as terminal
    sendJson(res, 502, {
      kind: "unknown",
      request_id: requestId,
      reason: String(exc instanceof Error ? exc.message : exc),
    });
    return;
  }
  try {
    const reply = await client.command(
      requestId,
      body.command,
      body.params.target,
      body.params.value,
      COMMAND_TIMEOUT_MS,
    );
    sendJson(res, 200, reply as unknown as object);
  } catch (exc) {
    sendJson(res, 502, {
      kind: "unknown",
      request_id: requestId,
      reason: `${exc instanceof Error ? exc.message : exc}; verify against telemetry`,
    });
  } finally {
    client.close();
  }
}

export function createBridge(opts: BridgeOptions): http.Server {
  return http.createServer((req, res) => {
    const url = new URL(req.url ?? "/", "http://bridge");
    if (req.method === "GET" && url.pathname === "/") {
      serveFile(res, path.join(STATIC_DIR, "index.html"), "text/html; charset=utf-8");
      return;
    }
    if (req.method === "GET" && /^\/[a-z]+\.js$/.test(url.pathname)) {
      serveFile(res, path.join(HERE, url.pathname.slice(1)), "text/javascript");
      return;
    }
    if (req.method === "GET" && url.pathname === "/config") {
      sendJson(res, 200, {
        target: `${opts.targetHost}:${opts.targetPort}`,
        tokenConfigured: opts.token !== undefined,
      });
      return;
    }
    if (req.method === "GET" && url.pathname === "/stream") {
      void handleStream(opts, url, res);
      return;
    }
    if (req.method === "POST" && url.pathname === "/command") {
      void handleCommand(opts, req, res);
      return;
    }
    sendJson(res, 404, { error: "not found" });
  });
}

function main(): void {
  const { values } = parseArgs({
    options: {
      listen: { type: "string", default: "127.0.0.1:8080" },
      connect: { type: "string", default: "127.0.0.1:9700" },
      token: { type: "string" },
    },
  });
  const target = splitAddress(values.connect!);
  const listen = splitAddress(values.listen!);
  const server = createBridge({
    targetHost: target.host,
    targetPort: target.port,
    token: values.token,
  });
  server.listen(listen.port, listen.host, () => {
    const addr = server.address();
    const where =
      typeof addr === "object" && addr ? `${addr.address}:${addr.port}` : "?";
    console.log(`console bridge on http://${where} -> ${values.connect}`);
  });
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
