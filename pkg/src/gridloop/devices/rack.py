"""The instrument rack: meters, ADC channels, and switchgear in one box.

Sampling runs the full transport: true values are scaled into meter
registers, framed, pushed over the serial byte channel, stream-decoded on
the controller side, and only then assembled into the telemetry frame.
DC rail channels go through the ADC model instead. Configured sensor
biases are added before quantization, register values saturate at their
encoding range.
"""

from __future__ import annotations

import cmath
import math
import random
from typing import Callable

from ..config import GEN_IDS, PlantConfig, breaker_id, rad_to_rpm
from ..errors import ConfigError
from ..plant.system import PlantSnapshot, Topology
from .meterframe import (
    REG_FREQ,
    REG_I_RMS,
    REG_P,
    REG_PHASE,
    REG_Q,
    REG_SPEED,
    REG_TORQUE,
    REG_V_RMS,
    REGISTERS,
    FrameStreamDecoder,
    MeterFrame,
    encode_meter_frame,
    encode_register_value,
)
from .relays import RelayDevice, command_relay, step_relay
from .sensors import SensorChannel, decode_sensor, read_torque_meter, sample_sensor
from .telemetry import GeneratorTelemetry, LoadBusTelemetry, TelemetryFrame

_METER_DEVICE_IDS = {"gen1": 1, "gen2": 2, "load_bus": 3}
_DEAD_BUS_VOLTS = 1.0

BIAS_CHANNELS: tuple[str, ...] = tuple(
    [f"{gid}.{q}" for gid in GEN_IDS for q in (
        "voltage_rms", "current_rms", "real_power", "reactive_power",
        "speed_rpm", "torque", "phase_deg", "field_voltage",
        "field_current")]
    + [f"load_bus.{q}" for q in ("voltage_rms", "current_rms", "frequency")])


def _wrap_deg(angle_deg: float) -> float:
    wrapped = math.fmod(angle_deg + 180.0, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped - 180.0


def _saturate_register(reg_id: int, value: float) -> float:
    """Clamp an engineering value to what the register can carry."""
    spec = REGISTERS[reg_id]
    if spec.offset_binary:
        low = -0x8000 * spec.lsb
        high = 0x7FFF * spec.lsb
    else:
        low = 0.0
        high = 0xFFFF * spec.lsb
    return min(max(value, low), high)


class DeviceRack:
    """Owns every emulated device for one plant."""

    def __init__(self, cfg: PlantConfig, control_period: float,
                 stream_factory: Callable[[str], random.Random]):
        self.cfg = cfg
        self.control_period = control_period
        nominal = cfg.machines[GEN_IDS[0]]
        self.nominal_frequency = nominal.nominal_frequency_hz
        self.decoder = FrameStreamDecoder()
        self._inbox: list[MeterFrame] = []
        self._sequences = {dev: 0 for dev in _METER_DEVICE_IDS.values()}
        self._prev_bus_angle: float | None = None
        self.biases: dict[str, float] = {}

        self.devices: dict[str, RelayDevice] = {}
        for gid in GEN_IDS:
            self.devices[breaker_id(gid)] = RelayDevice(
                id=breaker_id(gid), closed=False, commanded=False,
                actuation_delay=cfg.relay_delay_s,
                rated_current_a=cfg.load_switch_rating_a)
        for el in cfg.loads:
            self.devices[el.relay_id] = RelayDevice(
                id=el.relay_id, closed=False, commanded=False,
                actuation_delay=cfg.relay_delay_s,
                rated_current_a=cfg.load_switch_rating_a)

        sensor = cfg.sensor
        self._adc: dict[str, SensorChannel] = {}
        self._adc_rng: dict[str, random.Random] = {}
        for gid in GEN_IDS:
            for quantity, kind, scale in (
                    ("field_voltage", "voltage", sensor.dc_voltage_full_scale),
                    ("field_current", "current", sensor.dc_current_full_scale)):
                label = f"{gid}.{quantity}"
                self._adc[label] = SensorChannel(
                    kind=kind, full_scale=scale,
                    resolution_bits=sensor.adc_bits,
                    noise_sigma=sensor.noise_sigma,
                    reference_voltage=sensor.reference_voltage)
                self._adc_rng[label] = stream_factory(f"adc:{label}")

    # -- switchgear ----------------------------------------------------

    def set_initial_topology(self, closed_breakers: set[str],
                             closed_relays: set[str]) -> None:
        for gid in GEN_IDS:
            self.devices[breaker_id(gid)].force(gid in closed_breakers)
        for el in self.cfg.loads:
            self.devices[el.relay_id].force(el.relay_id in closed_relays)

    def command(self, device_id: str, close: bool, dt: float) -> None:
        command_relay(self.devices[device_id], close, dt)

    def force(self, device_id: str, close: bool) -> None:
        self.devices[device_id].force(close)

    def step_relays(self) -> None:
        for device in self.devices.values():
            step_relay(device)

    def topology(self) -> Topology:
        breakers = frozenset(
            gid for gid in GEN_IDS if self.devices[breaker_id(gid)].closed)
        relays = frozenset(
            el.relay_id for el in self.cfg.loads
            if self.devices[el.relay_id].closed)
        return Topology(closed_breakers=breakers, closed_relays=relays)

    # -- sensing -------------------------------------------------------

    def set_bias(self, channel: str, bias: float) -> None:
        if channel not in BIAS_CHANNELS:
            raise ConfigError(f"unknown sensor channel {channel!r}")
        self.biases[channel] = bias

    def _bias(self, channel: str) -> float:
        return self.biases.get(channel, 0.0)

    def _emit(self, device: str,
              registers: list[tuple[int, float]]) -> None:
        dev_id = _METER_DEVICE_IDS[device]
        encoded = tuple(
            (reg, encode_register_value(reg, _saturate_register(reg, value)))
            for reg, value in registers)
        frame = MeterFrame(device_id=dev_id,
                           sequence=self._sequences[dev_id],
                           registers=encoded)
        self._sequences[dev_id] = (self._sequences[dev_id] + 1) & 0xFF
        self._inbox.extend(self.decoder.feed(encode_meter_frame(frame)))

    def sample(self, t: float, snapshot: PlantSnapshot) -> TelemetryFrame:
        """Run one full sampling pass and assemble the telemetry frame."""
        solution = snapshot.solution
        bus_v = solution.bus_voltages["load_bus"]
        bus_alive = abs(bus_v) > _DEAD_BUS_VOLTS

        for gid in GEN_IDS:
            gen = snapshot.generators[gid]
            mover = snapshot.prime_movers[gid]
            v_ph = gen.terminal_voltage
            i_ph = gen.stator_current
            s = v_ph * i_ph.conjugate()
            meter = read_torque_meter(mover.shaft_torque,
                                      rad_to_rpm(mover.shaft_speed),
                                      self.cfg.torque_meter)
            if bus_alive and abs(v_ph) > _DEAD_BUS_VOLTS:
                phase = _wrap_deg(math.degrees(
                    cmath.phase(v_ph) - cmath.phase(bus_v)))
            else:
                phase = 0.0
            self._emit(gid, [
                (REG_V_RMS, abs(v_ph) + self._bias(f"{gid}.voltage_rms")),
                (REG_I_RMS, abs(i_ph) + self._bias(f"{gid}.current_rms")),
                (REG_P, s.real + self._bias(f"{gid}.real_power")),
                (REG_Q, s.imag + self._bias(f"{gid}.reactive_power")),
                (REG_SPEED,
                 meter["speed_rpm"] + self._bias(f"{gid}.speed_rpm")),
                (REG_TORQUE, meter["torque"] + self._bias(f"{gid}.torque")),
                (REG_PHASE, phase + self._bias(f"{gid}.phase_deg")),
            ])

        if bus_alive:
            angle = cmath.phase(bus_v)
            if self._prev_bus_angle is None:
                frequency = self.nominal_frequency
            else:
                slip = math.remainder(angle - self._prev_bus_angle,
                                      2.0 * math.pi)
                frequency = (self.nominal_frequency
                             + slip / (2.0 * math.pi * self.control_period))
            self._prev_bus_angle = angle
        else:
            frequency = 0.0
            self._prev_bus_angle = None
        self._emit("load_bus", [
            (REG_V_RMS, abs(bus_v) + self._bias("load_bus.voltage_rms")),
            (REG_I_RMS, (abs(solution.feeder_current)
                         + self._bias("load_bus.current_rms"))),
            (REG_FREQ, frequency + self._bias("load_bus.frequency")),
        ])

        decoded: dict[int, dict[str, float]] = {}
        for frame in self._inbox:
            decoded[frame.device_id] = frame.values()
        self._inbox.clear()
        # The serial link is loss free, so every emitted frame must have
        # come back out of the stream decoder by now.
        generators = {}
        for gid in GEN_IDS:
            regs = decoded[_METER_DEVICE_IDS[gid]]
            field_v = (snapshot.generators[gid].field_voltage
                       + self._bias(f"{gid}.field_voltage"))
            m = self.cfg.machines[gid]
            field_i = (snapshot.generators[gid].field_voltage
                       / m.gen_field_resistance
                       + self._bias(f"{gid}.field_current"))
            adc_v = self._adc[f"{gid}.field_voltage"]
            adc_i = self._adc[f"{gid}.field_current"]
            code_v = sample_sensor(adc_v, field_v,
                                   self._adc_rng[f"{gid}.field_voltage"])
            code_i = sample_sensor(adc_i, field_i,
                                   self._adc_rng[f"{gid}.field_current"])
            generators[gid] = GeneratorTelemetry(
                voltage_rms=regs["voltage_rms"],
                current_rms=regs["current_rms"],
                real_power=regs["real_power"],
                reactive_power=regs["reactive_power"],
                speed_rpm=regs["speed_rpm"],
                torque=regs["torque"],
                phase_deg=regs["phase_deg"],
                field_voltage=decode_sensor(adc_v, code_v),
                field_current=decode_sensor(adc_i, code_i),
                breaker_closed=self.devices[breaker_id(gid)].closed,
            )
        bus_regs = decoded[_METER_DEVICE_IDS["load_bus"]]
        load_bus = LoadBusTelemetry(
            voltage_rms=bus_regs["voltage_rms"],
            current_rms=bus_regs["current_rms"],
            frequency=bus_regs["frequency"],
        )
        relays = {el.relay_id: self.devices[el.relay_id].closed
                  for el in self.cfg.loads}
        return TelemetryFrame(timestamp=t, generators=generators,
                              load_bus=load_bus, relays=relays)
