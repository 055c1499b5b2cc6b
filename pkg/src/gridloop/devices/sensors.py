"""Analog front end: ADC channels and the shaft torque/power meter.

An ADC channel clamps to its full scale, adds seeded Gaussian noise, and
quantizes to the configured resolution. Decoding maps the code back to
engineering units, so decode(encode(x)) is within one LSB of the clamped
value plus whatever the noise moved it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..config import TorqueMeterParams, rpm_to_rad
from ..errors import ConfigError

_KINDS = ("voltage", "current")


@dataclass
class SensorChannel:
    """One unipolar ADC channel.

    full_scale is in engineering units; noise_sigma is a fraction of
    full scale. last_raw keeps the most recent code for debug readback.
    """

    kind: str
    full_scale: float
    resolution_bits: int = 10
    noise_sigma: float = 0.0
    reference_voltage: float = 3.3
    last_raw: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"sensor kind must be one of {_KINDS}")
        if self.full_scale <= 0:
            raise ConfigError("full_scale must be positive")
        if not 1 <= self.resolution_bits <= 24:
            raise ConfigError("resolution_bits must be in [1, 24]")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")

    @property
    def max_code(self) -> int:
        return (1 << self.resolution_bits) - 1


def sample_sensor(channel: SensorChannel, true_value: float,
                  rng: random.Random) -> int:
    """Clamp, add noise, quantize. Returns the raw code and records it."""
    value = min(max(true_value, 0.0), channel.full_scale)
    if channel.noise_sigma > 0.0:
        value += rng.gauss(0.0, channel.noise_sigma * channel.full_scale)
    code = round(value / channel.full_scale * channel.max_code)
    code = min(max(code, 0), channel.max_code)
    channel.last_raw = code
    return code


def decode_sensor(channel: SensorChannel, code: int) -> float:
    """Engineering value for a raw code."""
    return code / channel.max_code * channel.full_scale


def read_torque_meter(shaft_torque: float, shaft_speed_rpm: float,
                      meter: TorqueMeterParams) -> dict[str, float]:
    """Torque/power meter readout with range clipping.

    Torque and speed clip to the meter ranges; power is the product of
    the clipped values, itself clipped to the power range.
    """
    torque = min(max(shaft_torque, -meter.torque_range), meter.torque_range)
    speed = min(max(shaft_speed_rpm, -meter.speed_range_rpm),
                meter.speed_range_rpm)
    power = torque * rpm_to_rad(speed)
    power = min(max(power, -meter.power_range_w), meter.power_range_w)
    return {"torque": torque, "speed_rpm": speed, "power": power}
