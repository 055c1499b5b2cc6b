"""Telemetry frame assembled for the controller each control period.

Every value is what the instrumentation reported, after meter register
quantization or ADC conversion, not the underlying plant truth. Field
names here are the wire names used by the operator service.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GeneratorTelemetry:
    """Per-machine measurements.

    phase_deg is the synchroscope channel: electrical angle of the
    machine terminal relative to the load bus, wrapped to (-180, 180].
    breaker_closed is the physical breaker state at sampling time.
    """

    voltage_rms: float
    current_rms: float
    real_power: float
    reactive_power: float
    speed_rpm: float
    torque: float
    phase_deg: float
    field_voltage: float
    field_current: float
    breaker_closed: bool

    def as_dict(self) -> dict:
        return {
            "voltage_rms": self.voltage_rms,
            "current_rms": self.current_rms,
            "real_power": self.real_power,
            "reactive_power": self.reactive_power,
            "speed_rpm": self.speed_rpm,
            "torque": self.torque,
            "phase_deg": self.phase_deg,
            "field_voltage": self.field_voltage,
            "field_current": self.field_current,
            "breaker_closed": self.breaker_closed,
        }


@dataclass(frozen=True)
class LoadBusTelemetry:
    voltage_rms: float
    current_rms: float
    frequency: float

    def as_dict(self) -> dict:
        return {
            "voltage_rms": self.voltage_rms,
            "current_rms": self.current_rms,
            "frequency": self.frequency,
        }


@dataclass(frozen=True)
class TelemetryFrame:
    """One sampling instant: all measurements plus switch states."""

    timestamp: float
    generators: dict[str, GeneratorTelemetry]
    load_bus: LoadBusTelemetry
    relays: dict[str, bool]

    def as_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "generators": {gid: g.as_dict()
                           for gid, g in sorted(self.generators.items())},
            "load_bus": self.load_bus.as_dict(),
            "relays": {rid: closed
                       for rid, closed in sorted(self.relays.items())},
        }


def frame_from_dict(data: dict) -> TelemetryFrame:
    gens = {gid: GeneratorTelemetry(**g)
            for gid, g in data["generators"].items()}
    return TelemetryFrame(
        timestamp=data["timestamp"],
        generators=gens,
        load_bus=LoadBusTelemetry(**data["load_bus"]),
        relays=dict(data["relays"]),
    )
