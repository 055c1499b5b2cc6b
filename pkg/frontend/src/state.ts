/** Console state and its reducer.
 *
 * One plain object updated in place by applyMessage; rendering reads it
 * and never writes. Chart buffers and the decision feed are bounded so
 * a long run cannot grow the page without limit, and pending requests
 * always reach a terminal state: acked, rejected, or unknown when the
 * transport died underneath them.
 */

import { COMMAND_KINDS } from "./messages.js";
import type {
  DecisionMessage,
  ServerMessage,
  TelemetryFrame,
} from "./messages.js";

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "live"
  | "closed"
  | "rejected";

export interface PendingRequest {
  requestId: string;
  command: string;
  target: string;
  sentAtMs: number;
  state: "pending" | "acked" | "rejected" | "unknown";
  note: string;
}

export interface ChannelSample {
  t: number;
  value: number;
}

export interface FeedEntry {
  t: number;
  line: string;
}

export interface ConsoleConfig {
  chartCapacity: number;
  feedCapacity: number;
  resolvedCapacity: number;
  staleAfterMs: number;
}

export const DEFAULT_CONFIG: ConsoleConfig = {
  chartCapacity: 300,
  feedCapacity: 200,
  resolvedCapacity: 20,
  staleAfterMs: 2000,
};

/* Controller-side constants mirrored for display: regulation setpoint,
 * machine pole pairs, and the three synchronization tolerances. The
 * service does not publish its config, so these follow the documented
 * defaults. */
export const VOLTAGE_SETPOINT = 220.0;
export const POLE_PAIRS = 2;
export const BRANCH_LIMIT_A = 16.0;
export const SYNC_TOL = { voltage: 0.05, frequencyHz: 0.2, phaseDeg: 10.0 };
export const DEAD_BUS_FRAC = 0.1;

/** The charted set: per-machine voltage, current, speed, plus the load
 * bus pair. Keys index both the buffers and the strip chart layout. */
export const CHART_CHANNELS: { key: string; label: string; unit: string }[] = [
  { key: "gen1.voltage_rms", label: "gen1 terminal voltage", unit: "V" },
  { key: "gen1.current_rms", label: "gen1 stator current", unit: "A" },
  { key: "gen1.speed_rpm", label: "gen1 rotor speed", unit: "RPM" },
  { key: "gen2.voltage_rms", label: "gen2 terminal voltage", unit: "V" },
  { key: "gen2.current_rms", label: "gen2 stator current", unit: "A" },
  { key: "gen2.speed_rpm", label: "gen2 rotor speed", unit: "RPM" },
  { key: "load_bus.voltage_rms", label: "load bus voltage", unit: "V" },
  { key: "load_bus.current_rms", label: "load bus current", unit: "A" },
];

export interface ConsoleState {
  config: ConsoleConfig;
  status: ConnectionStatus;
  serverName: string;
  controlPeriodS: number;
  decimation: number;
  frame: TelemetryFrame | null;
  lastFrameAtMs: number;
  charts: Map<string, ChannelSample[]>;
  feed: FeedEntry[];
  pending: Map<string, PendingRequest>;
  resolved: PendingRequest[];
  modes: Record<string, string>;
  systemMode: string;
  lastDecisionT: number;
  digest: string | null;
  closeReason: string | null;
}

export function createConsoleState(
  config: ConsoleConfig = DEFAULT_CONFIG,
): ConsoleState {
  return {
    config,
    status: "idle",
    serverName: "",
    controlPeriodS: 0,
    decimation: 0,
    frame: null,
    lastFrameAtMs: 0,
    charts: new Map(CHART_CHANNELS.map((c) => [c.key, []])),
    feed: [],
    pending: new Map(),
    resolved: [],
    modes: {},
    systemMode: "",
    lastDecisionT: 0,
    digest: null,
    closeReason: null,
  };
}

function channelValue(frame: TelemetryFrame, key: string): number | null {
  const [device, field] = key.split(".");
  if (device === "load_bus") {
    const value = (frame.load_bus as unknown as Record<string, number>)[field];
    return typeof value === "number" ? value : null;
  }
  const gen = frame.generators[device];
  if (!gen) return null;
  const value = (gen as unknown as Record<string, number>)[field];
  return typeof value === "number" ? value : null;
}

function pushBounded<T>(buffer: T[], item: T, capacity: number): void {
  buffer.push(item);
  if (buffer.length > capacity) buffer.splice(0, buffer.length - capacity);
}

function applyTelemetry(
  state: ConsoleState,
  frame: TelemetryFrame,
  nowMs: number,
): void {
  state.frame = frame;
  state.lastFrameAtMs = nowMs;
  for (const { key } of CHART_CHANNELS) {
    const value = channelValue(frame, key);
    if (value === null) continue;
    const buffer = state.charts.get(key)!;
    pushBounded(buffer, { t: frame.timestamp, value }, state.config.chartCapacity);
  }
}

function applyDecision(state: ConsoleState, msg: DecisionMessage): void {
  state.modes = msg.modes;
  state.systemMode = msg.system_mode;
  state.lastDecisionT = msg.t;
  const lines: string[] = [...msg.annotations];
  for (const [device, action] of msg.relay_commands) {
    lines.push(`relay ${device}: ${action}`);
  }
  for (const [device, action] of msg.breaker_commands) {
    lines.push(`breaker ${device}: ${action}`);
  }
  if (msg.sync_close) {
    lines.push(`sync close: ${msg.sync_close[0]} onto ${msg.sync_close[1]}`);
  }
  for (const line of lines) {
    pushBounded(state.feed, { t: msg.t, line }, state.config.feedCapacity);
  }
}

function resolvePending(
  state: ConsoleState,
  requestId: string | null,
  outcome: "acked" | "rejected",
  note: string,
): void {
  if (requestId === null) return;
  const request = state.pending.get(requestId);
  if (!request) return;
  state.pending.delete(requestId);
  request.state = outcome;
  request.note = note;
  pushBounded(state.resolved, request, state.config.resolvedCapacity);
}

/** Fold one server message into the state. nowMs is the wall clock at
 * receipt; staleness and pending ages are measured against it. */
export function applyMessage(
  state: ConsoleState,
  msg: ServerMessage,
  nowMs: number,
): void {
  switch (msg.kind) {
    case "hello":
      state.status = "live";
      state.serverName = msg.name;
      state.controlPeriodS = msg.control_period_s;
      state.decimation = msg.decimation;
      return;
    case "telemetry":
      applyTelemetry(state, msg.frame, nowMs);
      return;
    case "decision":
      applyDecision(state, msg);
      return;
    case "ack":
      resolvePending(state, msg.request_id, "acked", msg.note);
      return;
    case "reject":
      resolvePending(state, msg.request_id, "rejected", msg.reason);
      return;
    case "event":
      if (msg.event === "finished") {
        state.digest = msg.digest ?? null;
        state.closeReason = "run finished";
      } else if (msg.event === "dropped") {
        state.closeReason = msg.reason ?? "dropped by server";
        state.status = "closed";
      }
      return;
  }
}

/** Record a just-sent command so the UI can show it as pending. */
export function trackRequest(
  state: ConsoleState,
  requestId: string,
  command: string,
  target: string,
  nowMs: number,
): void {
  state.pending.set(requestId, {
    requestId,
    command,
    target,
    sentAtMs: nowMs,
    state: "pending",
    note: "",
  });
}

/** Transport loss: outcomes of in-flight requests are unknowable, so
 * mark them and tell the operator to verify against telemetry. */
export function markConnectionLost(state: ConsoleState, reason: string): void {
  state.status = "closed";
  if (state.closeReason === null) state.closeReason = reason;
  for (const request of state.pending.values()) {
    request.state = "unknown";
    request.note = "connection lost; verify against telemetry";
    pushBounded(state.resolved, request, state.config.resolvedCapacity);
  }
  state.pending.clear();
}

export function isStale(state: ConsoleState, nowMs: number): boolean {
  if (state.status !== "live" || state.frame === null) return false;
  return nowMs - state.lastFrameAtMs > state.config.staleAfterMs;
}

export interface SyncResiduals {
  voltage: number;
  frequencyHz: number;
  phaseDeg: number;
  withinTolerance: boolean;
}

/** Residuals the sync check evaluates, computed from one frame: relative
 * voltage mismatch against the setpoint, electrical frequency mismatch
 * from rotor speed, and the synchroscope phase channel. */
export function syncResiduals(
  frame: TelemetryFrame,
  gid: string,
): SyncResiduals | null {
  const gen = frame.generators[gid];
  if (!gen) return null;
  const voltage =
    Math.abs(gen.voltage_rms - frame.load_bus.voltage_rms) / VOLTAGE_SETPOINT;
  const frequencyHz = Math.abs(
    (gen.speed_rpm * POLE_PAIRS) / 60 - frame.load_bus.frequency,
  );
  const phaseDeg = Math.abs(gen.phase_deg);
  return {
    voltage,
    frequencyHz,
    phaseDeg,
    withinTolerance:
      voltage <= SYNC_TOL.voltage &&
      frequencyHz <= SYNC_TOL.frequencyHz &&
      phaseDeg <= SYNC_TOL.phaseDeg,
  };
}

/** Bus considered energized when its voltage is clearly above zero; the
 * fraction mirrors the controller's dead bus threshold. */
export function busEnergized(frame: TelemetryFrame): boolean {
  return frame.load_bus.voltage_rms > DEAD_BUS_FRAC * VOLTAGE_SETPOINT;
}

/** Client-side screen for obviously malformed commands, so typos fail
 * in the page instead of making a round trip. The controller remains
 * the authority on everything else. */
export function validateCommand(
  command: string,
  target: string,
  value?: number | boolean,
): string | null {
  if (!(COMMAND_KINDS as readonly string[]).includes(command)) {
    return `unknown command ${command}`;
  }
  if (!target) return "target required";
  if (command === "relay_set" || command === "breaker_set") {
    if (typeof value !== "boolean") return "value must be true or false";
  }
  if (command === "setpoint_change") {
    if (typeof value !== "number" || !Number.isFinite(value) || value <= 0) {
      return "value must be a positive number";
    }
    const channel = target.includes(".")
      ? target.slice(target.indexOf(".") + 1)
      : target;
    if (channel !== "voltage" && channel !== "speed_rpm") {
      return `unknown setpoint ${target}`;
    }
  }
  return null;
}
