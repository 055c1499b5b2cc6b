"""Discrete PI update with conditional-integration windup protection."""

from __future__ import annotations

from ..config import PIGains

# The integrator never needs to exceed the output span; a tighter bound
# here only shortens recovery after a long saturated stretch.
_INTEGRATOR_LIMIT = 1.0


def pi_step(gains: PIGains, error: float, integrator: float,
            dt: float) -> tuple[float, float]:
    """Advance one PI period; returns (output, new integrator).

    The integrator accepts the new increment only while the unclamped
    output stays inside the output range, so a saturated loop holds its
    integral state instead of winding up.
    """
    candidate = integrator + gains.ki * error * dt
    unclamped = gains.bias + gains.kp * error + candidate
    if gains.out_min <= unclamped <= gains.out_max:
        integrator = min(max(candidate, -_INTEGRATOR_LIMIT),
                         _INTEGRATOR_LIMIT)
    output = gains.bias + gains.kp * error + integrator
    return min(max(output, gains.out_min), gains.out_max), integrator
