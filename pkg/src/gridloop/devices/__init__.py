"""Device emulation: sensing, metering transport, and actuation."""

from .meterframe import (
    FrameStreamDecoder,
    MeterFrame,
    REGISTERS,
    crc16_ccitt,
    decode_meter_frame,
    decode_register_value,
    encode_meter_frame,
    encode_register_value,
)
from .rack import DeviceRack
from .relays import RelayDevice, command_relay
from .sensors import SensorChannel, decode_sensor, read_torque_meter, sample_sensor
from .telemetry import GeneratorTelemetry, LoadBusTelemetry, TelemetryFrame

__all__ = [
    "DeviceRack",
    "FrameStreamDecoder",
    "MeterFrame",
    "REGISTERS",
    "crc16_ccitt",
    "decode_meter_frame",
    "decode_register_value",
    "encode_meter_frame",
    "encode_register_value",
    "RelayDevice",
    "command_relay",
    "SensorChannel",
    "decode_sensor",
    "read_torque_meter",
    "sample_sensor",
    "GeneratorTelemetry",
    "LoadBusTelemetry",
    "TelemetryFrame",
]
