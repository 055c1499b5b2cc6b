"""Steady-state initialization of the coupled plant.

Scenario runs start at the closed-loop equilibrium implied by the initial
topology and the controller setpoints: regulated machines hold their
terminal voltage and speed setpoints exactly, so the solve reduces to the
network algebra plus a power-share condition between paralleled machines.
The regulator integrators are preloaded so the first commanded duties
reproduce the equilibrium inputs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..config import (
    GEN_IDS,
    ControllerConfig,
    PlantConfig,
    rpm_to_rad,
)
from ..errors import ScenarioError
from .machines import motor_flux_constant
from .system import SetState, Topology


@dataclass(frozen=True)
class InitState:
    """Initial integrator states plus the duties that hold them."""

    sets: dict[str, SetState]
    excitation_duty: dict[str, float]
    armature_duty: dict[str, float]


def _sourced_equilibrium(plant: PlantConfig, v_set: float,
                         sourced: list[str],
                         closed_relays: frozenset[str]
                         ) -> dict[str, tuple[float, float, complex]]:
    """Solve angles and EMF magnitudes for breaker-closed machines.

    Returns {gen_id: (delta, emf, stator_current)}. Relies on fsolve over
    [delta_g, emf_g]*k + [V3_re, V3_im] with the load bus angle as the
    phase reference.
    """
    y_load = 0j
    for el in plant.loads:
        if el.relay_id in closed_relays:
            y_load += 1.0 / el.impedance

    z_src = {}
    ratio = {}
    for gid in sourced:
        m = plant.machines[gid]
        z_src[gid] = (complex(m.stator_resistance, m.synchronous_reactance)
                      + plant.lines[gid])
        ratio[gid] = m.gen_rating_w

    p_load_guess = v_set ** 2 * y_load.real
    n = len(sourced)

    def unpack(x):
        v3 = complex(x[2 * n], x[2 * n + 1])
        gens = {gid: (x[2 * i], x[2 * i + 1])
                for i, gid in enumerate(sourced)}
        return gens, v3

    def residual(x):
        gens, v3 = unpack(x)
        kcl = -v3 * y_load
        out = []
        p_per_rating = []
        for gid in sourced:
            delta, emf = gens[gid]
            e_ph = emf * cmath.exp(1j * delta)
            current = (e_ph - v3) / z_src[gid]
            kcl += current
            m = plant.machines[gid]
            z_s = complex(m.stator_resistance, m.synchronous_reactance)
            v_term = e_ph - z_s * current
            out.append(abs(v_term) - v_set)
            p_per_rating.append(
                (e_ph * current.conjugate()).real / ratio[gid])
        out.append(kcl.real * 10.0)
        out.append(kcl.imag * 10.0)
        if n == 2:
            if abs(y_load) < 1.0e-9:
                # Unloaded island: equal share is degenerate, pin the
                # angle difference instead.
                out.append((gens[sourced[0]][0]
                            - gens[sourced[1]][0]) * 100.0)
            else:
                out.append((p_per_rating[0] - p_per_rating[1]) * 100.0)
        out.append(v3.imag)
        return out

    guess = []
    for gid in sourced:
        p_share = p_load_guess / n
        x_tot = abs(z_src[gid])
        delta0 = math.asin(min(0.9, p_share * x_tot
                               / max(v_set * v_set, 1.0)))
        i0 = p_share / v_set
        emf0 = math.hypot(v_set, x_tot * i0)
        guess.extend([delta0, emf0])
    guess.extend([v_set, 0.0])

    x, _, ier, msg = optimize.fsolve(residual, np.array(guess),
                                     full_output=True, xtol=1.0e-12)
    if ier != 1:
        raise ScenarioError(f"no steady-state equilibrium found: {msg}")
    gens, v3 = unpack(x)
    solution = {}
    for gid in sourced:
        delta, emf = float(gens[gid][0]), float(gens[gid][1])
        e_ph = emf * cmath.exp(1j * delta)
        current = complex((e_ph - complex(v3)) / z_src[gid])
        solution[gid] = (delta, emf, current)
    return solution


def initial_steady_state(plant: PlantConfig, ctrl: ControllerConfig,
                         topology: Topology,
                         modes: dict[str, str]) -> InitState:
    """Closed-loop equilibrium for the initial topology.

    Machines with closed breakers carry the load at the voltage and speed
    setpoints; open-breaker machines spin unloaded at their setpoints
    with their EMF regulated to the voltage setpoint; tripped machines
    rest de-excited. Raises ScenarioError when the setpoints are not
    reachable with duties in [0, 1].
    """
    omega_set = rpm_to_rad(ctrl.speed_setpoint_rpm)
    v_set = ctrl.voltage_setpoint
    sourced = [gid for gid in GEN_IDS
               if gid in topology.closed_breakers]
    sourced_solution = {}
    if sourced:
        sourced_solution = _sourced_equilibrium(
            plant, v_set, sourced, topology.closed_relays)

    sets = {}
    exc_duty = {}
    arm_duty = {}
    for gid in GEN_IDS:
        m = plant.machines[gid]
        k_phi = motor_flux_constant(m, plant.rails.motor_field_voltage)
        if modes.get(gid) == "tripped":
            sets[gid] = SetState(0.0, 0.0, 0.0, 0.0)
            exc_duty[gid] = 0.0
            arm_duty[gid] = 0.0
            continue
        if gid in sourced_solution:
            delta, emf, current = sourced_solution[gid]
            e_ph = emf * cmath.exp(1j * delta)
            t_elec = (e_ph * current.conjugate()).real / omega_set
        else:
            delta, emf = 0.0, v_set
            t_elec = 0.0
        i_arm = (t_elec + m.damping * omega_set) / k_phi
        v_arm = k_phi * omega_set + m.armature_resistance * i_arm
        v_field = emf * m.rated_speed / (m.emf_gain * omega_set)
        duty_arm = v_arm / plant.rails.armature_voltage
        duty_exc = v_field / plant.rails.excitation_voltage
        if not 0.0 <= duty_arm <= 1.0:
            raise ScenarioError(
                f"{gid}: armature duty {duty_arm:.3f} outside [0, 1]; "
                "initial operating point is infeasible")
        if not 0.0 <= duty_exc <= 1.0:
            raise ScenarioError(
                f"{gid}: excitation duty {duty_exc:.3f} outside [0, 1]; "
                "initial operating point is infeasible")
        sets[gid] = SetState(
            armature_current=i_arm,
            rotor_angle=delta,
            rotor_speed=omega_set,
            internal_emf=emf,
        )
        exc_duty[gid] = duty_exc
        arm_duty[gid] = duty_arm
    return InitState(sets=sets, excitation_duty=exc_duty,
                     armature_duty=arm_duty)
