"""Machine models: separately excited DC prime mover and alternator.

The alternator is the classical constant-flux phasor model: an internal
EMF magnitude behind the synchronous reactance, first-order exciter lag
from field voltage to EMF, and the swing equation on the combined shaft.
Rotor angles are electrical radians measured in a frame rotating at the
nominal electrical speed, so a machine at rated shaft speed holds a
constant angle.

Standalone step functions integrate one machine against fixed inputs with
a two-stage explicit (Heun) step, matching the integrator used by the
coupled plant. Damping on the common shaft belongs to the swing equation,
so the prime mover stepped alone is undamped apart from its load torque.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from ..config import MachineParams
from ..errors import DegenerateSpeedError, IntegrationDivergenceError

_SPEED_EPS = 1.0e-6


@dataclass(frozen=True)
class PrimeMoverState:
    """DC motor snapshot. shaft_power is torque times speed by
    construction."""

    armature_voltage: float
    armature_current: float
    field_current: float
    shaft_torque: float
    shaft_speed: float

    @property
    def shaft_power(self) -> float:
        return self.shaft_torque * self.shaft_speed


@dataclass(frozen=True)
class GeneratorState:
    """Alternator snapshot.

    rotor_angle is electrical radians relative to the nominal rotating
    frame; rotor_speed is mechanical rad/s. terminal_voltage and
    stator_current are RMS phasors in the same frame.
    """

    rotor_angle: float
    rotor_speed: float
    field_voltage: float
    internal_emf: float
    terminal_voltage: complex
    stator_current: complex

    @property
    def emf_phasor(self) -> complex:
        return self.internal_emf * cmath.exp(1j * self.rotor_angle)


def motor_field_current(params: MachineParams, field_supply: float) -> float:
    return field_supply / params.motor_field_resistance


def motor_flux_constant(params: MachineParams, field_supply: float) -> float:
    """Back-EMF / torque constant k*phi at the given field supply, V*s."""
    i_f = motor_field_current(params, field_supply)
    return params.torque_constant * i_f / params.motor_rated_field_a


def emf_target(params: MachineParams, field_voltage: float,
               omega: float) -> float:
    """Steady internal EMF for a field voltage at a shaft speed."""
    return params.emf_gain * field_voltage * (omega / params.rated_speed)


def _require_finite(value: float, quantity: str) -> float:
    if not math.isfinite(value):
        raise IntegrationDivergenceError(
            f"{quantity} left the finite range", quantity=quantity)
    return value


def step_prime_mover(state: PrimeMoverState, params: MachineParams,
                     armature_voltage: float, field_supply: float,
                     load_torque: float, dt: float) -> PrimeMoverState:
    """Advance armature current and shaft speed by one Heun step.

    The motor drives load_torque on the set inertia. Shaft damping is not
    applied here; it belongs to the swing equation when the full set is
    integrated.
    """
    k_phi = motor_flux_constant(params, field_supply)
    r_a = params.armature_resistance
    l_a = params.armature_inductance
    j = params.inertia

    def deriv(current: float, speed: float) -> tuple[float, float]:
        di = (armature_voltage - r_a * current - k_phi * speed) / l_a
        domega = (k_phi * current - load_torque) / j
        return di, domega

    di1, dw1 = deriv(state.armature_current, state.shaft_speed)
    i_mid = state.armature_current + dt * di1
    w_mid = max(0.0, state.shaft_speed + dt * dw1)
    di2, dw2 = deriv(i_mid, w_mid)
    current = state.armature_current + 0.5 * dt * (di1 + di2)
    speed = max(0.0, state.shaft_speed + 0.5 * dt * (dw1 + dw2))
    _require_finite(current, "armature_current")
    _require_finite(speed, "shaft_speed")
    return PrimeMoverState(
        armature_voltage=armature_voltage,
        armature_current=current,
        field_current=motor_field_current(params, field_supply),
        shaft_torque=k_phi * current,
        shaft_speed=speed,
    )


def _airgap_torque(emf_phasor: complex, stator_current: complex,
                   omega: float) -> float:
    p_air = (emf_phasor * stator_current.conjugate()).real
    if omega <= _SPEED_EPS:
        if abs(p_air) <= 1.0e-9:
            return 0.0
        raise DegenerateSpeedError(
            "air-gap power demanded at standstill")
    return p_air / omega


def step_generator(state: GeneratorState, params: MachineParams,
                   mech_torque: float, field_voltage: float,
                   bus_voltage: complex | None, dt: float,
                   omega_ref: float | None = None) -> GeneratorState:
    """Advance one alternator against a fixed bus phasor by one Heun step.

    bus_voltage None means the machine breaker is open: zero stator
    current and zero electrical torque. omega_ref defaults to the nominal
    electrical speed for the machine's pole count.
    """
    if omega_ref is None:
        omega_ref = params.pole_pairs * params.rated_speed
    z_s = complex(params.stator_resistance, params.synchronous_reactance)

    def deriv(delta: float, omega: float, emf: float):
        e_ph = emf * cmath.exp(1j * delta)
        if bus_voltage is None:
            torque = 0.0
        else:
            current = (e_ph - bus_voltage) / z_s
            torque = _airgap_torque(e_ph, current, omega)
        d_delta = params.pole_pairs * omega - omega_ref
        d_omega = (mech_torque - torque
                   - params.damping * omega) / params.inertia
        d_emf = (emf_target(params, field_voltage, omega)
                 - emf) / params.exciter_time_constant
        return d_delta, d_omega, d_emf

    dd1, dw1, de1 = deriv(state.rotor_angle, state.rotor_speed,
                          state.internal_emf)
    delta_mid = state.rotor_angle + dt * dd1
    omega_mid = max(0.0, state.rotor_speed + dt * dw1)
    emf_mid = state.internal_emf + dt * de1
    dd2, dw2, de2 = deriv(delta_mid, omega_mid, emf_mid)
    delta = state.rotor_angle + 0.5 * dt * (dd1 + dd2)
    omega = max(0.0, state.rotor_speed + 0.5 * dt * (dw1 + dw2))
    emf = state.internal_emf + 0.5 * dt * (de1 + de2)
    for value, name in ((delta, "rotor_angle"), (omega, "rotor_speed"),
                        (emf, "internal_emf")):
        _require_finite(value, name)

    e_ph = emf * cmath.exp(1j * delta)
    if bus_voltage is None:
        current = 0.0 + 0.0j
        terminal = e_ph
    else:
        current = (e_ph - bus_voltage) / z_s
        terminal = bus_voltage
    return GeneratorState(
        rotor_angle=delta,
        rotor_speed=omega,
        field_voltage=field_voltage,
        internal_emf=emf,
        terminal_voltage=terminal,
        stator_current=current,
    )


def electrical_torque(gen: GeneratorState) -> float:
    """Air-gap torque from the machine's own phasors.

    Equals delivered electrical power plus stator ohmic loss, divided by
    shaft speed. Zero current gives zero torque regardless of speed;
    nonzero power at standstill is degenerate and raises.
    """
    if gen.stator_current == 0:
        return 0.0
    return _airgap_torque(gen.emf_phasor, gen.stator_current,
                          gen.rotor_speed)
