"""Supervisory control: regulation loops and the protection state machine."""

from .pi import pi_step
from .supervisor import (
    ControllerDecision,
    ControllerState,
    GenMode,
    OperatorCommand,
    SyncCheck,
    SystemMode,
    Violation,
    check_limits,
    controller_step,
    decision_line,
    initial_state,
    regulate_excitation,
    sync_check,
)

__all__ = [
    "pi_step",
    "ControllerDecision",
    "ControllerState",
    "GenMode",
    "OperatorCommand",
    "SyncCheck",
    "SystemMode",
    "Violation",
    "check_limits",
    "controller_step",
    "decision_line",
    "initial_state",
    "regulate_excitation",
    "sync_check",
]
