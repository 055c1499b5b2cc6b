"""Averaged model of the DC-DC buck stages driving field and armature."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DutyRangeError


@dataclass(frozen=True)
class BuckConverter:
    """Ideal averaged buck stage: output = duty * input.

    Switching ripple is far above the control bandwidth here, so the
    averaged model is all the supervisory loop ever sees.
    """

    duty_cycle: float
    input_voltage: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.duty_cycle <= 1.0:
            raise DutyRangeError(
                f"duty cycle {self.duty_cycle} outside [0, 1]")
        if self.input_voltage < 0.0:
            raise DutyRangeError("input voltage must be >= 0")

    @property
    def output_voltage(self) -> float:
        return self.duty_cycle * self.input_voltage


def buck_output(converter: BuckConverter) -> float:
    """Averaged output voltage of a buck stage."""
    return converter.output_voltage
