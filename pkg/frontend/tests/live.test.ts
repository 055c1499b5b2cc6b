/** Round trip against a real serve run.
 *
 * Drives the actual CLI binary: a relay toggle must be acked and show
 * up in the rendered diagram within 100 ms of simulated time after the
 * controller applies it, and a console that subscribes and then drops
 * off mid-run must leave the run digest identical to a run that never
 * had a console. Needs the simulator package installed on PATH.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import type {
  DecisionMessage,
  TelemetryMessage,
} from "../src/messages.js";
import {
  applyMessage,
  createConsoleState,
  trackRequest,
} from "../src/state.js";
import { renderSingleLine } from "../src/views.js";

const SCENARIO = `schema_version: 1
name: console-roundtrip
seed: 4242
duration: 2.0
initial:
  breakers: [gen1, gen2]
  relays: [L1, L2]
  modes:
    gen1: running
    gen2: running
`;

const scenarioFile = path.join(
  fs.mkdtempSync(path.join(os.tmpdir(), "console-live-")),
  "roundtrip.yaml",
);
fs.writeFileSync(scenarioFile, SCENARIO);

interface ServeHandle {
  proc: ChildProcess;
  host: string;
  port: number;
  stdout: () => string;
  exited: Promise<number | null>;
}

let current: ServeHandle | null = null;

function startServe(extra: string[]): Promise<ServeHandle> {
  const proc = spawn(
    "gridloop",
    ["serve", scenarioFile, "--listen", "127.0.0.1:0", ...extra],
    { env: { ...process.env, PYTHONUNBUFFERED: "1" } },
  );
  let out = "";
  let err = "";
  proc.stdout!.on("data", (chunk) => {
    out += chunk.toString();
  });
  proc.stderr!.on("data", (chunk) => {
    err += chunk.toString();
  });
  const exited = new Promise<number | null>((resolve) => {
    proc.on("exit", (code) => resolve(code));
  });
  return new Promise((resolve, reject) => {
    const deadline = Date.now() + 20_000;
    const poll = () => {
      const m = out.match(/listening on ([\d.]+):(\d+)/);
      if (m) {
        const handle: ServeHandle = {
          proc,
          host: m[1],
          port: Number(m[2]),
          stdout: () => out,
          exited,
        };
        current = handle;
        resolve(handle);
        return;
      }
      if (proc.exitCode !== null) {
        reject(new Error(`serve exited early: ${err || out}`));
        return;
      }
      if (Date.now() > deadline) {
        reject(new Error("serve never reported its address"));
        return;
      }
      setTimeout(poll, 20);
    };
    poll();
  });
}

function digestFrom(text: string): string {
  const m = text.match(/^digest: ([0-9a-f]{64})$/m);
  if (!m) throw new Error(`no digest line in:\n${text}`);
  return m[1];
}

afterEach(async () => {
  if (current) {
    current.proc.kill("SIGKILL");
    await current.exited;
    current = null;
  }
});

describe("console round trip against a live serve", () => {
  it("relay toggle is acked and rendered within 100 ms of application", async () => {
    // paced, undecimated: the decision that applies the command must
    // reach the stream so the test can stamp the application time
    const serve = await startServe(["--decimation", "1"]);
    const client = await ConsoleClient.connect({
      host: serve.host,
      port: serve.port,
    });
    const state = createConsoleState();
    client.onMessage((m) => applyMessage(state, m, Date.now()));
    applyMessage(state, client.hello!, Date.now());
    await client.subscribe("sub-1");

    await client.waitFor((m) => m.kind === "telemetry", 15_000);
    expect(state.frame!.relays.L2).toBe(true);

    trackRequest(state, "tg-1", "relay_set", "L2", Date.now());
    const reply = await client.command("tg-1", "relay_set", "L2", false, 15_000);
    expect(reply).toMatchObject({ kind: "ack", request_id: "tg-1", note: "queued" });
    expect(state.pending.size).toBe(0);

    // the decision that applies the command stamps the application time
    const applied = (await client.waitFor(
      (m) =>
        m.kind === "decision" &&
        m.relay_commands.some(([device, action]) => device === "L2" && action === "open"),
      15_000,
    )) as DecisionMessage;
    const seen = (await client.waitFor(
      (m) => m.kind === "telemetry" && m.frame.relays.L2 === false,
      15_000,
    )) as TelemetryMessage;
    const lagS = seen.frame.timestamp - applied.t;
    expect(lagS).toBeGreaterThanOrEqual(0);
    expect(lagS).toBeLessThanOrEqual(0.1 + 1e-9);

    // and the diagram the operator sees agrees
    const html = renderSingleLine(state, Date.now());
    const start = html.indexOf('data-relay="L2"');
    const group = html.slice(html.lastIndexOf("<g", start), html.indexOf("</g>", start));
    expect(group).toContain('data-closed="false"');

    client.close();
    const code = await serve.exited;
    expect(code).toBe(0);
    console.log(
      `[PASS] console round-trip: relay open visible ${(lagS * 1e3).toFixed(1)} ms` +
        " after application (limit 100 ms)",
    );
  });

  it("a console closed mid-run leaves the digest of a console-free run", async () => {
    const offline = spawnSync("gridloop", ["run", scenarioFile], {
      encoding: "utf-8",
      timeout: 120_000,
    });
    expect(offline.status).toBe(0);
    const referenceDigest = digestFrom(offline.stdout);

    const serve = await startServe(["--no-pace"]);
    const client = await ConsoleClient.connect({
      host: serve.host,
      port: serve.port,
    });
    await client.subscribe("sub-2");
    // watch a few frames, then vanish mid-run
    let frames = 0;
    await client.waitFor((m) => m.kind === "telemetry" && ++frames >= 5, 15_000);
    client.close();

    const code = await serve.exited;
    expect(code).toBe(0);
    const servedDigest = digestFrom(serve.stdout());
    expect(servedDigest).toBe(referenceDigest);
    console.log(
      `[PASS] console round-trip: mid-run close kept digest ${servedDigest.slice(0, 12)}` +
        "… equal to the console-free run",
    );
  });
});
