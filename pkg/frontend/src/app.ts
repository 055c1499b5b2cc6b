/** Page wiring: event source in, rendered sections out.
 *
 * Messages are folded into the state as they arrive; a fixed-interval
 * render loop repaints from the state, so a fast stream never outruns
 * the DOM. Commands go through the bridge as one POST each, tracked
 * pending until the ack or reject comes back in the response.
 */

import { isServerMessage } from "./messages.js";
import type { ServerMessage } from "./messages.js";
import {
  applyMessage,
  createConsoleState,
  markConnectionLost,
  trackRequest,
  validateCommand,
} from "./state.js";
import {
  renderCharts,
  renderFeed,
  renderMeters,
  renderRequests,
  renderSingleLine,
  renderStatus,
  renderSynchroscope,
  GEN_IDS,
} from "./views.js";

const RENDER_EVERY_MS = 100;

let state = createConsoleState();
let source: EventSource | null = null;
let requestCounter = 0;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function addrInput(): HTMLInputElement {
  return el("addr") as HTMLInputElement;
}

function tokenInput(): HTMLInputElement {
  return el("token") as HTMLInputElement;
}

function render(): void {
  const now = Date.now();
  el("status").innerHTML = renderStatus(state, now);
  el("diagram").innerHTML = renderSingleLine(state, now);
  el("scopes").innerHTML = GEN_IDS.map((gid) =>
    renderSynchroscope(state, gid),
  ).join("");
  el("charts").innerHTML = renderCharts(state);
  el("meters").innerHTML = renderMeters(state);
  el("feed").innerHTML = renderFeed(state);
  el("requests").innerHTML = renderRequests(state);
}

function connect(): void {
  disconnect();
  state = createConsoleState();
  state.status = "connecting";
  const params = new URLSearchParams();
  if (addrInput().value.trim()) params.set("addr", addrInput().value.trim());
  if (tokenInput().value) params.set("token", tokenInput().value);
  source = new EventSource(`/stream?${params.toString()}`);
  source.onmessage = (event) => {
    let parsed: unknown;
    try {
      parsed = JSON.parse(event.data);
    } catch {
      return;
    }
    if (isServerMessage(parsed)) applyMessage(state, parsed, Date.now());
  };
  source.addEventListener("close", (event) => {
    let reason = "stream closed";
    try {
      reason = JSON.parse((event as MessageEvent).data).reason ?? reason;
    } catch {
      // keep default
    }
    markConnectionLost(state, reason);
    disconnect();
  });
  source.onerror = () => {
    if (source && source.readyState === EventSource.CLOSED) {
      markConnectionLost(state, "bridge unreachable");
      disconnect();
    }
  };
}

function disconnect(): void {
  if (source) {
    source.close();
    source = null;
  }
  if (state.status === "live" || state.status === "connecting") {
    markConnectionLost(state, "disconnected");
  }
}

async function sendCommand(
  command: string,
  target: string,
  value?: number | boolean,
): Promise<void> {
  const requestId = `rq-${++requestCounter}`;
  const problem = validateCommand(command, target, value);
  if (problem !== null) {
    trackRequest(state, requestId, command, target, Date.now());
    applyMessage(
      state,
      { kind: "reject", request_id: requestId, reason: `not sent: ${problem}` },
      Date.now(),
    );
    return;
  }
  trackRequest(state, requestId, command, target, Date.now());
  const body: Record<string, unknown> = {
    request_id: requestId,
    command,
    params: value === undefined ? { target } : { target, value },
  };
  if (addrInput().value.trim()) body.addr = addrInput().value.trim();
  if (tokenInput().value) body.token = tokenInput().value;
  let reply: ServerMessage | null = null;
  try {
    const response = await fetch("/command", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const parsed: unknown = await response.json();
    if (isServerMessage(parsed)) reply = parsed;
  } catch {
    reply = null;
  }
  if (reply) {
    applyMessage(state, reply, Date.now());
  } else {
    // bridge reported unknown or the fetch itself failed
    const pending = state.pending.get(requestId);
    if (pending) {
      state.pending.delete(requestId);
      pending.state = "unknown";
      pending.note = "no reply; verify against telemetry";
      state.resolved.push(pending);
    }
  }
}

function wireClicks(): void {
  document.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    if (!target) return;
    const relay = target.closest<HTMLElement>("[data-relay]");
    if (relay) {
      const closed = relay.dataset.closed === "true";
      void sendCommand("relay_set", relay.dataset.relay!, !closed);
      return;
    }
    const breaker = target.closest<HTMLElement>("[data-breaker]");
    if (breaker) {
      const gid = breaker.dataset.breaker!;
      const closed = state.frame?.generators[gid]?.breaker_closed ?? false;
      void sendCommand("breaker_set", gid, !closed);
      return;
    }
    const sync = target.closest<HTMLElement>("[data-sync]");
    if (sync) {
      void sendCommand("sync_request", sync.dataset.sync!);
      return;
    }
    const fault = target.closest<HTMLElement>("[data-command]");
    if (fault) {
      void sendCommand(fault.dataset.command!, fault.dataset.target!);
      return;
    }
  });
  el("connect").addEventListener("click", () => connect());
  el("disconnect").addEventListener("click", () => disconnect());
  el("setpoint-apply").addEventListener("click", () => {
    const channel = (el("setpoint-channel") as HTMLSelectElement).value;
    const value = Number((el("setpoint-value") as HTMLInputElement).value);
    void sendCommand("setpoint_change", channel, value);
  });
}

async function init(): Promise<void> {
  try {
    const response = await fetch("/config");
    const config = (await response.json()) as { target?: string };
    if (config.target && !addrInput().value) addrInput().value = config.target;
  } catch {
    // bridge config endpoint is a convenience only
  }
  wireClicks();
  render();
  setInterval(render, RENDER_EVERY_MS);
}

void init();
