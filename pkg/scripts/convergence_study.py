#!/usr/bin/env python3
"""Step-size convergence of the plant integrator.

Kicks one machine off its equilibrium and integrates the same window at
a ladder of step sizes with the inputs frozen, so the controller and
the meters stay out of the comparison. The error against a much finer
reference should shrink roughly fourfold per halving if the stepper
really is second order accurate.
"""

import math

from gridloop.config import GEN_IDS, ControllerConfig, PlantConfig
from gridloop.plant.converter import BuckConverter, buck_output
from gridloop.plant.equilibrium import initial_steady_state
from gridloop.plant.system import PlantInputs, PlantModel, Topology

HORIZON_S = 0.3
LADDER = (4.0e-4, 2.0e-4, 1.0e-4, 5.0e-5, 2.5e-5)
REFERENCE_DT = 6.25e-6


def state_error(a, b) -> float:
    worst = 0.0
    for gid in GEN_IDS:
        worst = max(
            worst,
            abs(a[gid].rotor_speed - b[gid].rotor_speed),
            abs(a[gid].rotor_angle - b[gid].rotor_angle),
            abs(a[gid].internal_emf - b[gid].internal_emf) / 100.0,
            abs(a[gid].armature_current - b[gid].armature_current),
        )
    return worst


def main() -> None:
    plant = PlantConfig()
    ctrl = ControllerConfig()
    topology = Topology(closed_breakers=frozenset(GEN_IDS),
                        closed_relays=frozenset(("L1", "L2")))
    init = initial_steady_state(plant, ctrl, topology,
                                {g: "running" for g in GEN_IDS})
    inputs = PlantInputs(
        armature_voltage={g: buck_output(BuckConverter(
            init.armature_duty[g], plant.rails.armature_voltage))
            for g in GEN_IDS},
        gen_field_voltage={g: buck_output(BuckConverter(
            init.excitation_duty[g], plant.rails.excitation_voltage))
            for g in GEN_IDS},
        motor_field_supply={g: plant.rails.motor_field_voltage
                            for g in GEN_IDS},
    )
    sets = {g: init.sets[g].copy() for g in GEN_IDS}
    sets["gen1"].rotor_speed += 3.0
    sets["gen1"].rotor_angle += 0.05
    sets["gen1"].internal_emf *= 0.95

    model = PlantModel(plant)
    reference = model.integrate(sets, inputs, topology, REFERENCE_DT,
                                round(HORIZON_S / REFERENCE_DT))

    print(f"horizon {HORIZON_S} s, reference dt {REFERENCE_DT * 1e6:.2f} us")
    print(f"{'dt':>10}  {'error':>12}  {'ratio':>7}")
    previous = None
    for dt in LADDER:
        final = model.integrate(sets, inputs, topology, dt,
                                round(HORIZON_S / dt))
        err = state_error(final, reference)
        ratio = previous / err if previous else math.nan
        print(f"{dt * 1e6:8.1f}us  {err:12.3e}  {ratio:7.2f}")
        previous = err


if __name__ == "__main__":
    main()
