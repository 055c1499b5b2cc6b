/** Wire schema of the live service.
 *
 * Every message is one JSON object; field names here match the server
 * byte for byte, including the snake_case, so parsed messages can be
 * used without any mapping layer.
 */

export interface GeneratorTelemetry {
  voltage_rms: number;
  current_rms: number;
  real_power: number;
  reactive_power: number;
  speed_rpm: number;
  torque: number;
  phase_deg: number;
  field_voltage: number;
  field_current: number;
  breaker_closed: boolean;
}

export interface LoadBusTelemetry {
  voltage_rms: number;
  current_rms: number;
  frequency: number;
}

export interface TelemetryFrame {
  timestamp: number;
  generators: Record<string, GeneratorTelemetry>;
  load_bus: LoadBusTelemetry;
  relays: Record<string, boolean>;
}

// client -> server

export interface HelloRequest {
  kind: "hello";
  proto_version: number;
  token?: string;
}

export interface SubscribeRequest {
  kind: "subscribe";
  request_id?: string;
}

export interface CommandParams {
  target: string;
  value?: number | boolean;
}

export interface CommandRequest {
  kind: "command";
  command: string;
  params: CommandParams;
  request_id: string;
}

export type ClientMessage = HelloRequest | SubscribeRequest | CommandRequest;

// server -> client

export interface HelloReply {
  kind: "hello";
  proto_version: number;
  name: string;
  control_period_s: number;
  decimation: number;
}

export interface AckMessage {
  kind: "ack";
  request_id: string | null;
  note: string;
}

export interface RejectMessage {
  kind: "reject";
  request_id: string | null;
  reason: string;
}

export interface TelemetryMessage {
  kind: "telemetry";
  frame: TelemetryFrame;
}

export interface DecisionMessage {
  kind: "decision";
  t: number;
  modes: Record<string, string>;
  system_mode: string;
  excitation_duty: Record<string, number>;
  armature_duty: Record<string, number>;
  relay_commands: [string, string][];
  breaker_commands: [string, string][];
  sync_close: [string, string] | null;
  annotations: string[];
}

export interface EventMessage {
  kind: "event";
  event: string;
  digest?: string;
  diagnostic?: string | null;
  reason?: string;
}

export type ServerMessage =
  | HelloReply
  | AckMessage
  | RejectMessage
  | TelemetryMessage
  | DecisionMessage
  | EventMessage;

/** Command kinds the controller mediates; anything else is rejected. */
export const COMMAND_KINDS = [
  "relay_set",
  "breaker_set",
  "sync_request",
  "setpoint_change",
  "reset_trip",
  "generator_trip",
  "generator_start",
] as const;

export type CommandKind = (typeof COMMAND_KINDS)[number];

export function isServerMessage(value: unknown): value is ServerMessage {
  if (typeof value !== "object" || value === null) return false;
  const kind = (value as { kind?: unknown }).kind;
  return (
    kind === "hello" ||
    kind === "ack" ||
    kind === "reject" ||
    kind === "telemetry" ||
    kind === "decision" ||
    kind === "event"
  );
}
