"""Coupled plant: both motor-generator sets against the shared network.

The continuous state is four scalars per set (armature current, rotor
angle, rotor speed, EMF magnitude). Each integration step is a two-stage
explicit (Heun) step; the network is re-solved at both stages so the
electrical torque seen by the swing equation is consistent with the
stage states. Switch states are frozen across a step, which is why relay
transitions are only applied between steps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from ..config import GEN_IDS, PlantConfig
from ..errors import IntegrationDivergenceError
from .machines import (
    GeneratorState,
    PrimeMoverState,
    emf_target,
    motor_field_current,
    motor_flux_constant,
)
from .network import NetworkSolution, solve_network

_STALL_SPEED = 1.0


@dataclass
class SetState:
    """Mutable integrator state for one motor-generator set."""

    armature_current: float
    rotor_angle: float
    rotor_speed: float
    internal_emf: float

    def copy(self) -> "SetState":
        return SetState(self.armature_current, self.rotor_angle,
                        self.rotor_speed, self.internal_emf)


@dataclass(frozen=True)
class PlantInputs:
    """Voltages applied to the machines, held across a control period."""

    armature_voltage: dict[str, float]
    gen_field_voltage: dict[str, float]
    motor_field_supply: dict[str, float]


@dataclass(frozen=True)
class Topology:
    """Actual switch states: closed breakers by generator id, closed
    relays by relay id."""

    closed_breakers: frozenset[str]
    closed_relays: frozenset[str]


@dataclass(frozen=True)
class PlantSnapshot:
    """Published machine and network states at one instant."""

    prime_movers: dict[str, PrimeMoverState]
    generators: dict[str, GeneratorState]
    solution: NetworkSolution


@dataclass(frozen=True)
class PowerFlows:
    """Instantaneous power terms used by the energy ledger."""

    mechanical: float
    damping: float
    load: float
    line_loss: float
    stator_loss: float

    @property
    def electrical(self) -> float:
        return self.load + self.line_loss + self.stator_loss


class PlantModel:
    """Derivatives, stepping, and snapshots for the coupled plant."""

    def __init__(self, cfg: PlantConfig):
        self.cfg = cfg
        # One rotating reference frame for the whole island.
        ref = cfg.machines[GEN_IDS[0]]
        self.omega_ref = ref.pole_pairs * ref.rated_speed

    def solve(self, sets: dict[str, SetState],
              topology: Topology) -> NetworkSolution:
        emf = {gid: sets[gid].internal_emf
               * cmath.exp(1j * sets[gid].rotor_angle) for gid in GEN_IDS}
        return solve_network(self.cfg, emf, topology.closed_breakers,
                             topology.closed_relays)

    def _derivatives(self, sets: dict[str, SetState], inputs: PlantInputs,
                     topology: Topology
                     ) -> tuple[dict[str, tuple[float, float, float, float]],
                                NetworkSolution]:
        solution = self.solve(sets, topology)
        derivs = {}
        for gid in GEN_IDS:
            st = sets[gid]
            m = self.cfg.machines[gid]
            k_phi = motor_flux_constant(m, inputs.motor_field_supply[gid])
            di = (inputs.armature_voltage[gid]
                  - m.armature_resistance * st.armature_current
                  - k_phi * st.rotor_speed) / m.armature_inductance
            t_mech = k_phi * st.armature_current
            p_air = solution.airgap_power[gid]
            if st.rotor_speed > _STALL_SPEED:
                t_elec = p_air / st.rotor_speed
            elif abs(p_air) < 1.0e-9:
                t_elec = 0.0
            else:
                raise IntegrationDivergenceError(
                    f"{gid} rotor stalled while loaded",
                    quantity=f"rotor_speed:{gid}")
            d_omega = (t_mech - t_elec
                       - m.damping * st.rotor_speed) / m.inertia
            d_delta = m.pole_pairs * st.rotor_speed - self.omega_ref
            d_emf = (emf_target(m, inputs.gen_field_voltage[gid],
                                st.rotor_speed)
                     - st.internal_emf) / m.exciter_time_constant
            derivs[gid] = (di, d_delta, d_omega, d_emf)
        return derivs, solution

    def heun_step(self, sets: dict[str, SetState], inputs: PlantInputs,
                  topology: Topology, dt: float
                  ) -> tuple[dict[str, SetState], NetworkSolution]:
        """One fixed step. Returns the new states and the network solution
        at the step's starting point (stage one)."""
        k1, start_solution = self._derivatives(sets, inputs, topology)
        predictor = {}
        for gid in GEN_IDS:
            st = sets[gid]
            di, dd, dw, de = k1[gid]
            predictor[gid] = SetState(
                armature_current=st.armature_current + dt * di,
                rotor_angle=st.rotor_angle + dt * dd,
                rotor_speed=max(0.0, st.rotor_speed + dt * dw),
                internal_emf=st.internal_emf + dt * de,
            )
        k2, _ = self._derivatives(predictor, inputs, topology)
        out = {}
        for gid in GEN_IDS:
            st = sets[gid]
            di1, dd1, dw1, de1 = k1[gid]
            di2, dd2, dw2, de2 = k2[gid]
            new = SetState(
                armature_current=st.armature_current
                + 0.5 * dt * (di1 + di2),
                rotor_angle=st.rotor_angle + 0.5 * dt * (dd1 + dd2),
                rotor_speed=max(0.0, st.rotor_speed + 0.5 * dt * (dw1 + dw2)),
                internal_emf=st.internal_emf + 0.5 * dt * (de1 + de2),
            )
            for value, name in (
                    (new.armature_current, "armature_current"),
                    (new.rotor_angle, "rotor_angle"),
                    (new.rotor_speed, "rotor_speed"),
                    (new.internal_emf, "internal_emf")):
                if not math.isfinite(value):
                    raise IntegrationDivergenceError(
                        f"{gid} {name} left the finite range",
                        quantity=f"{name}:{gid}")
            out[gid] = new
        return out, start_solution

    def integrate(self, sets: dict[str, SetState], inputs: PlantInputs,
                  topology: Topology, dt: float,
                  steps: int) -> dict[str, SetState]:
        """Fixed-input integration helper for convergence studies."""
        current = {gid: sets[gid].copy() for gid in GEN_IDS}
        for _ in range(steps):
            current, _ = self.heun_step(current, inputs, topology, dt)
        return current

    def power_flows(self, sets: dict[str, SetState], inputs: PlantInputs,
                    solution: NetworkSolution) -> PowerFlows:
        mech = 0.0
        damping = 0.0
        stator_loss = 0.0
        line_loss = 0.0
        for gid in GEN_IDS:
            st = sets[gid]
            m = self.cfg.machines[gid]
            k_phi = motor_flux_constant(m, inputs.motor_field_supply[gid])
            mech += k_phi * st.armature_current * st.rotor_speed
            damping += m.damping * st.rotor_speed ** 2
            stator_loss += (abs(solution.stator_currents[gid]) ** 2
                            * m.stator_resistance)
            line_loss += (abs(solution.line_currents[gid]) ** 2
                          * self.cfg.lines[gid].real)
        load = 0.0
        for el in self.cfg.loads:
            load += (abs(solution.load_currents[el.id]) ** 2
                     * el.impedance.real)
        return PowerFlows(mechanical=mech, damping=damping, load=load,
                          line_loss=line_loss, stator_loss=stator_loss)

    def kinetic_energy(self, sets: dict[str, SetState]) -> float:
        return sum(0.5 * self.cfg.machines[gid].inertia
                   * sets[gid].rotor_speed ** 2 for gid in GEN_IDS)

    def snapshot(self, sets: dict[str, SetState], inputs: PlantInputs,
                 topology: Topology) -> PlantSnapshot:
        solution = self.solve(sets, topology)
        movers = {}
        gens = {}
        for gid in GEN_IDS:
            st = sets[gid]
            m = self.cfg.machines[gid]
            k_phi = motor_flux_constant(m, inputs.motor_field_supply[gid])
            movers[gid] = PrimeMoverState(
                armature_voltage=inputs.armature_voltage[gid],
                armature_current=st.armature_current,
                field_current=motor_field_current(
                    m, inputs.motor_field_supply[gid]),
                shaft_torque=k_phi * st.armature_current,
                shaft_speed=st.rotor_speed,
            )
            gens[gid] = GeneratorState(
                rotor_angle=st.rotor_angle,
                rotor_speed=st.rotor_speed,
                field_voltage=inputs.gen_field_voltage[gid],
                internal_emf=st.internal_emf,
                terminal_voltage=solution.terminal_voltages[gid],
                stator_current=solution.stator_currents[gid],
            )
        return PlantSnapshot(prime_movers=movers, generators=gens,
                             solution=solution)
