/** Render functions: state in, HTML/SVG strings out.
 *
 * Everything here is a pure function of the console state so the views
 * can be unit tested in Node and re-rendered from scratch after a
 * reconnect. Interactive elements carry data- attributes; the page
 * wires click handlers by delegation and nothing here touches the DOM.
 */

import type { GeneratorTelemetry } from "./messages.js";
import {
  BRANCH_LIMIT_A,
  CHART_CHANNELS,
  SYNC_TOL,
  VOLTAGE_SETPOINT,
  busEnergized,
  isStale,
  syncResiduals,
  type ChannelSample,
  type ConsoleState,
} from "./state.js";

export const GEN_IDS = ["gen1", "gen2"] as const;
export const RELAY_IDS = ["L1", "L2", "L3", "L4"] as const;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function fmt(value: number, digits = 1): string {
  return Number.isFinite(value) ? value.toFixed(digits) : "?";
}

// -- single-line diagram ---------------------------------------------

function liveClass(hot: boolean): string {
  return hot ? "hot" : "dead";
}

function genSymbol(
  state: ConsoleState,
  gid: string,
  gen: GeneratorTelemetry,
  y: number,
): string {
  const mode = state.modes[gid] ?? "unknown";
  const machineHot = gen.voltage_rms > 0.1 * VOLTAGE_SETPOINT;
  const badge =
    mode === "tripped"
      ? `<text class="badge tripped" x="56" y="${y + 46}">tripped</text>`
      : `<text class="badge" x="56" y="${y + 46}">${escapeHtml(mode)}</text>`;
  // machine circle, stub to the breaker, breaker box, stub to the bus
  const brkClosed = gen.breaker_closed;
  const brk = brkClosed
    ? `<rect class="breaker closed clickable" data-breaker="${gid}" x="122" y="${y - 9}" width="18" height="18"/>`
    : `<rect class="breaker open clickable" data-breaker="${gid}" x="122" y="${y - 9}" width="18" height="18"/>`;
  return `
  <g class="gen" data-gen="${gid}">
    <circle class="machine ${liveClass(machineHot)}" cx="56" cy="${y}" r="22"/>
    <text class="gen-label" x="56" y="${y + 5}">${gid === "gen1" ? "G1" : "G2"}</text>
    ${badge}
    <line class="wire ${liveClass(machineHot)}" x1="78" y1="${y}" x2="122" y2="${y}"/>
    ${brk}
    <line class="wire ${liveClass(brkClosed && machineHot)}" x1="140" y1="${y}" x2="190" y2="${y}"/>
  </g>`;
}

function relaySymbol(
  rid: string,
  closed: boolean | undefined,
  busHot: boolean,
  x: number,
): string {
  if (closed === undefined) return "";
  // closed: straight drop to the load box; open: blade swung aside
  const blade = closed
    ? `<line class="blade" x1="${x}" y1="168" x2="${x}" y2="196"/>`
    : `<line class="blade" x1="${x}" y1="168" x2="${x + 14}" y2="190"/>`;
  const feed = closed && busHot;
  return `
  <g class="relay ${closed ? "closed" : "open"} clickable" data-relay="${rid}" data-closed="${closed}">
    <line class="wire ${liveClass(busHot)}" x1="${x}" y1="150" x2="${x}" y2="168"/>
    ${blade}
    <line class="wire ${liveClass(feed)}" x1="${x}" y1="196" x2="${x}" y2="210"/>
    <rect class="load ${liveClass(feed)}" x="${x - 12}" y="210" width="24" height="26"/>
    <text class="relay-label" x="${x}" y="254">${rid}</text>
  </g>`;
}

/** The one-line diagram: two machines through breakers onto their bus
 * sections, tie lines to the load bus, and the relay-switched loads.
 * Coloring follows measured voltage presence, not inferred topology. */
export function renderSingleLine(state: ConsoleState, nowMs: number): string {
  const frame = state.frame;
  if (!frame) {
    return `<div class="placeholder">waiting for telemetry</div>`;
  }
  const busHot = busEnergized(frame);
  const parts: string[] = [];
  const ys: Record<string, number> = { gen1: 70, gen2: 230 };
  for (const gid of GEN_IDS) {
    const gen = frame.generators[gid];
    if (gen) parts.push(genSymbol(state, gid, gen, ys[gid]));
  }
  // gen bus sections and tie lines, colored by the load bus domain on
  // the far side of each breaker
  parts.push(`
  <line class="bus ${liveClass(busHot)}" x1="190" y1="40" x2="190" y2="100"/>
  <line class="bus ${liveClass(busHot)}" x1="190" y1="200" x2="190" y2="260"/>
  <line class="wire ${liveClass(busHot)}" x1="190" y1="70" x2="300" y2="140"/>
  <line class="wire ${liveClass(busHot)}" x1="190" y1="230" x2="300" y2="160"/>
  <line class="bus load-bus ${liveClass(busHot)}" x1="300" y1="110" x2="300" y2="190" data-bus="load_bus"/>
  <line class="wire feeder ${liveClass(busHot)}" x1="300" y1="150" x2="680" y2="150"/>
  <text class="bus-label" x="300" y="102">load bus ${fmt(frame.load_bus.voltage_rms)} V</text>
  <text class="feeder-label" x="490" y="140">feeder ${fmt(frame.load_bus.current_rms, 2)} A / ${fmt(BRANCH_LIMIT_A, 0)} A</text>`);
  const xs = [400, 480, 560, 640];
  RELAY_IDS.forEach((rid, i) => {
    parts.push(relaySymbol(rid, frame.relays[rid], busHot, xs[i]));
  });
  const stale = isStale(state, nowMs)
    ? `<div class="stale-banner">stale data: no telemetry for ${((nowMs - state.lastFrameAtMs) / 1000).toFixed(1)} s</div>`
    : "";
  return `${stale}<svg class="single-line" viewBox="0 0 720 270" role="img">${parts.join("")}</svg>`;
}

// -- synchroscope -----------------------------------------------------

function wedgePath(cx: number, cy: number, r: number, halfDeg: number): string {
  const a = (halfDeg * Math.PI) / 180;
  const x1 = cx + r * Math.sin(-a);
  const y1 = cy - r * Math.cos(-a);
  const x2 = cx + r * Math.sin(a);
  const y2 = cy - r * Math.cos(a);
  return `M ${cx} ${cy} L ${fmt(x1, 2)} ${fmt(y1, 2)} A ${r} ${r} 0 0 1 ${fmt(x2, 2)} ${fmt(y2, 2)} Z`;
}

function residualRow(
  label: string,
  value: string,
  ok: boolean,
  tol: string,
): string {
  return `<tr class="${ok ? "ok" : "bad"}"><td>${label}</td><td>${value}</td><td>tol ${tol}</td></tr>`;
}

/** Synchroscope for one machine: needle at the phase difference to the
 * bus, 12 o'clock is in phase, plus the three numeric residuals the
 * sync check enforces. */
export function renderSynchroscope(state: ConsoleState, gid: string): string {
  const frame = state.frame;
  const gen = frame?.generators[gid];
  if (!frame || !gen) {
    return `<div class="placeholder">no data for ${escapeHtml(gid)}</div>`;
  }
  if (gen.breaker_closed) {
    return `<div class="synchroscope in-parallel" data-gen="${gid}"><span class="scope-title">${gid}</span> in parallel</div>`;
  }
  const res = syncResiduals(frame, gid)!;
  const cx = 60;
  const cy = 64;
  const r = 48;
  const dial = `
  <circle class="dial" cx="${cx}" cy="${cy}" r="${r}"/>
  <path class="tol-wedge" d="${wedgePath(cx, cy, r, SYNC_TOL.phaseDeg)}"/>
  <line class="tick" x1="${cx}" y1="${cy - r}" x2="${cx}" y2="${cy - r + 6}"/>
  <line class="needle" x1="${cx}" y1="${cy}" x2="${cx}" y2="${cy - r + 4}"
        transform="rotate(${fmt(gen.phase_deg, 2)} ${cx} ${cy})"/>`;
  const rows = [
    residualRow(
      "&Delta;V",
      `${fmt(res.voltage * 100, 1)}%`,
      res.voltage <= SYNC_TOL.voltage,
      `${fmt(SYNC_TOL.voltage * 100, 0)}%`,
    ),
    residualRow(
      "&Delta;f",
      `${fmt(res.frequencyHz, 2)} Hz`,
      res.frequencyHz <= SYNC_TOL.frequencyHz,
      `${fmt(SYNC_TOL.frequencyHz, 1)} Hz`,
    ),
    residualRow(
      "&Delta;&phi;",
      `${fmt(res.phaseDeg, 1)}&deg;`,
      res.phaseDeg <= SYNC_TOL.phaseDeg,
      `${fmt(SYNC_TOL.phaseDeg, 0)}&deg;`,
    ),
  ].join("");
  const verdict = res.withinTolerance ? "permissive" : "blocked";
  return `
  <div class="synchroscope ${verdict}" data-gen="${gid}">
    <span class="scope-title">${gid}</span>
    <svg viewBox="0 0 120 128">${dial}</svg>
    <table class="residuals">${rows}</table>
    <button class="sync-request" data-sync="${gid}">request sync</button>
  </div>`;
}

// -- strip charts -----------------------------------------------------

export function renderStripChart(
  key: string,
  label: string,
  unit: string,
  samples: ChannelSample[],
): string {
  const w = 220;
  const h = 64;
  if (samples.length < 2) {
    return `<div class="chart" data-channel="${key}"><span class="chart-label">${escapeHtml(label)}</span><span class="chart-value">&mdash;</span></div>`;
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of samples) {
    if (s.value < lo) lo = s.value;
    if (s.value > hi) hi = s.value;
  }
  if (hi - lo < 1e-9) {
    // flat trace: pad so the line sits mid-chart instead of on an edge
    const pad = Math.max(1e-9, Math.abs(hi) * 0.02, 0.5);
    lo -= pad;
    hi += pad;
  }
  const t0 = samples[0].t;
  const t1 = samples[samples.length - 1].t;
  const span = Math.max(t1 - t0, 1e-9);
  const points = samples
    .map((s) => {
      const x = ((s.t - t0) / span) * w;
      const y = h - ((s.value - lo) / (hi - lo)) * h;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  const last = samples[samples.length - 1].value;
  return `
  <div class="chart" data-channel="${key}">
    <span class="chart-label">${escapeHtml(label)}</span>
    <span class="chart-value">${fmt(last, 1)} ${unit}</span>
    <svg viewBox="0 0 ${w} ${h}" preserveAspectRatio="none"><polyline points="${points}"/></svg>
  </div>`;
}

export function renderCharts(state: ConsoleState): string {
  const charts = CHART_CHANNELS.map((c) =>
    renderStripChart(c.key, c.label, c.unit, state.charts.get(c.key) ?? []),
  );
  return `<div class="charts">${charts.join("")}</div>`;
}

// -- meters, feed, requests, status ----------------------------------

const METER_ROWS: { field: keyof GeneratorTelemetry; label: string; unit: string; digits: number }[] = [
  { field: "voltage_rms", label: "terminal voltage", unit: "V", digits: 1 },
  { field: "current_rms", label: "stator current", unit: "A", digits: 2 },
  { field: "real_power", label: "real power", unit: "W", digits: 0 },
  { field: "reactive_power", label: "reactive power", unit: "var", digits: 0 },
  { field: "speed_rpm", label: "rotor speed", unit: "RPM", digits: 1 },
  { field: "torque", label: "shaft torque", unit: "N·m", digits: 2 },
  { field: "field_voltage", label: "field voltage", unit: "V", digits: 1 },
  { field: "field_current", label: "field current", unit: "A", digits: 2 },
  { field: "phase_deg", label: "phase to bus", unit: "°", digits: 1 },
];

export function renderMeters(state: ConsoleState): string {
  const frame = state.frame;
  if (!frame) return `<div class="placeholder">waiting for telemetry</div>`;
  const head = `<tr><th></th>${GEN_IDS.map((g) => `<th>${g}</th>`).join("")}<th>load bus</th></tr>`;
  const rows = METER_ROWS.map((row) => {
    const cells = GEN_IDS.map((gid) => {
      const gen = frame.generators[gid];
      const value = gen ? (gen[row.field] as number) : NaN;
      return `<td data-meter="${gid}.${row.field}">${fmt(value, row.digits)}</td>`;
    }).join("");
    return `<tr><th>${row.label} [${row.unit}]</th>${cells}<td></td></tr>`;
  });
  const bus = frame.load_bus;
  rows.push(
    `<tr><th>bus voltage [V]</th><td></td><td></td><td data-meter="load_bus.voltage_rms">${fmt(bus.voltage_rms)}</td></tr>`,
    `<tr><th>bus current [A]</th><td></td><td></td><td data-meter="load_bus.current_rms">${fmt(bus.current_rms, 2)}</td></tr>`,
    `<tr><th>frequency [Hz]</th><td></td><td></td><td data-meter="load_bus.frequency">${fmt(bus.frequency, 3)}</td></tr>`,
  );
  return `<table class="meters">${head}${rows.join("")}</table>`;
}

export function renderFeed(state: ConsoleState): string {
  if (state.feed.length === 0) {
    return `<div class="placeholder">no controller annotations yet</div>`;
  }
  const items = [...state.feed]
    .reverse()
    .map(
      (e) =>
        `<li><span class="feed-t">${e.t.toFixed(3)}</span> ${escapeHtml(e.line)}</li>`,
    );
  return `<ul class="feed">${items.join("")}</ul>`;
}

export function renderRequests(state: ConsoleState): string {
  const chips: string[] = [];
  for (const req of state.pending.values()) {
    chips.push(
      `<span class="req pending" data-request="${escapeHtml(req.requestId)}">${escapeHtml(req.command)} ${escapeHtml(req.target)}: pending</span>`,
    );
  }
  for (const req of [...state.resolved].reverse()) {
    chips.push(
      `<span class="req ${req.state}" data-request="${escapeHtml(req.requestId)}">${escapeHtml(req.command)} ${escapeHtml(req.target)}: ${req.state}${req.note ? " (" + escapeHtml(req.note) + ")" : ""}</span>`,
    );
  }
  if (chips.length === 0) return `<div class="placeholder">no requests sent</div>`;
  return `<div class="requests">${chips.join("")}</div>`;
}

export function renderStatus(state: ConsoleState, nowMs: number): string {
  const bits: string[] = [];
  bits.push(`<span class="conn ${state.status}">${state.status}</span>`);
  if (state.serverName) {
    bits.push(`<span class="run-name">${escapeHtml(state.serverName)}</span>`);
  }
  if (state.frame) {
    bits.push(`<span class="sim-time">t=${state.frame.timestamp.toFixed(3)} s</span>`);
  }
  if (state.systemMode) {
    bits.push(`<span class="system-mode">${escapeHtml(state.systemMode)}</span>`);
  }
  if (isStale(state, nowMs)) {
    bits.push(`<span class="stale">stale</span>`);
  }
  if (state.digest) {
    bits.push(`<span class="digest">digest ${escapeHtml(state.digest.slice(0, 12))}&hellip;</span>`);
  }
  if (state.closeReason && state.status === "closed") {
    bits.push(`<span class="close-reason">${escapeHtml(state.closeReason)}</span>`);
  }
  return bits.join(" ");
}
