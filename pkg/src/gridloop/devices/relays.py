"""Relay and breaker devices with actuation delay.

A command schedules the physical transition ceil(delay / dt) plant steps
in the future. A conflicting command inside that window replaces the
schedule, so the last command wins; repeating the command already in
flight does not restart the countdown. Transitions land between
integration steps, never inside one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class RelayDevice:
    """One switching device. closed is the physical state; commanded
    tracks the most recent command."""

    id: str
    closed: bool
    commanded: bool
    actuation_delay: float = 0.010
    rated_current_a: float = 16.0
    steps_pending: int = 0

    def force(self, closed: bool) -> None:
        """Immediately set the physical state, cancelling any pending
        command. Models a hand on the switch rather than a coil drive."""
        self.closed = closed
        self.commanded = closed
        self.steps_pending = 0


def command_relay(device: RelayDevice, close: bool, dt: float) -> None:
    """Latch a command; the state follows after ceil(delay / dt) steps."""
    if close == device.commanded:
        return
    device.commanded = close
    if close == device.closed:
        # The opposite command was cancelled before it landed.
        device.steps_pending = 0
        return
    if device.actuation_delay <= 0.0:
        device.closed = close
        device.steps_pending = 0
        return
    device.steps_pending = max(1, math.ceil(
        device.actuation_delay / dt - 1.0e-9))


def step_relay(device: RelayDevice) -> bool:
    """Advance the actuation countdown by one plant step. Returns True
    when the physical state changed on this step."""
    if device.steps_pending <= 0:
        return False
    device.steps_pending -= 1
    if device.steps_pending == 0 and device.closed != device.commanded:
        device.closed = device.commanded
        return True
    return False
