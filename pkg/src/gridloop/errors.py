"""Exception types shared across the package."""

from __future__ import annotations


class GridloopError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GridloopError):
    """A configuration value violates its documented constraint."""


class ScenarioError(GridloopError):
    """A scenario document failed validation."""


class DutyRangeError(GridloopError):
    """A converter duty cycle fell outside [0, 1]."""


class DegenerateSpeedError(GridloopError):
    """Electrical torque requested at zero rotor speed with nonzero power."""


class NetworkSingularError(GridloopError):
    """The nodal admittance system has no unique solution.

    ``buses`` names the island whose equations were degenerate.
    """

    def __init__(self, message: str, buses: tuple[str, ...] = ()):
        super().__init__(message)
        self.buses = buses


class IntegrationDivergenceError(GridloopError):
    """A plant state left the finite regime during integration.

    ``quantity`` names the first offending state variable.
    """

    def __init__(self, message: str, quantity: str):
        super().__init__(message)
        self.quantity = quantity


class EncodingRangeError(GridloopError):
    """A register value does not fit the wire encoding.

    ``register`` is the numeric register id that overflowed.
    """

    def __init__(self, message: str, register: int):
        super().__init__(message)
        self.register = register


class FrameDecodeError(GridloopError):
    """A byte buffer could not be decoded as a meter frame.

    ``reason`` is one of ``sync``, ``length``, ``crc``, ``register``,
    ``trailing``.
    """

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason
