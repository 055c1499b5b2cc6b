import type {
  DecisionMessage,
  GeneratorTelemetry,
  TelemetryFrame,
} from "../src/messages.js";

export function makeGen(
  overrides: Partial<GeneratorTelemetry> = {},
): GeneratorTelemetry {
  return {
    voltage_rms: 220,
    current_rms: 2.5,
    real_power: 550,
    reactive_power: 30,
    speed_rpm: 1400,
    torque: 4.1,
    phase_deg: 0.5,
    field_voltage: 48,
    field_current: 1.1,
    breaker_closed: true,
    ...overrides,
  };
}

export function makeFrame(
  t: number,
  overrides: {
    gen1?: Partial<GeneratorTelemetry>;
    gen2?: Partial<GeneratorTelemetry>;
    bus?: Partial<TelemetryFrame["load_bus"]>;
    relays?: Record<string, boolean>;
  } = {},
): TelemetryFrame {
  return {
    timestamp: t,
    generators: {
      gen1: makeGen(overrides.gen1),
      gen2: makeGen(overrides.gen2),
    },
    load_bus: {
      voltage_rms: 219,
      current_rms: 4.6,
      frequency: 46.667,
      ...overrides.bus,
    },
    relays: overrides.relays ?? { L1: true, L2: true, L3: false, L4: false },
  };
}

export function decision(
  t: number,
  extra: Partial<DecisionMessage> = {},
): DecisionMessage {
  return {
    kind: "decision",
    t,
    modes: { gen1: "running", gen2: "running" },
    system_mode: "normal",
    excitation_duty: { gen1: 0.45, gen2: 0.45 },
    armature_duty: { gen1: 0.8, gen2: 0.8 },
    relay_commands: [],
    breaker_commands: [],
    sync_close: null,
    annotations: [],
    ...extra,
  };
}
