#!/usr/bin/env python3
"""Loss-of-generator recovery metrics.

Runs the bundled trip scenario and reports how the surviving machine
picks up the load: voltage nadir, time back inside the band, and the
power split before and after. Useful when retuning the regulators.
"""

import os

from gridloop.engine.scenario import Scenario
from gridloop.engine.simulation import Simulation

SCENARIO = os.path.join(os.path.dirname(__file__), os.pardir,
                        "scenarios", "gen1_trip.yaml")


def main() -> None:
    scenario = Scenario.load(SCENARIO)
    record = Simulation(scenario).run()
    ctrl = scenario.controller
    lo = ctrl.voltage_setpoint - ctrl.voltage_band
    hi = ctrl.voltage_setpoint + ctrl.voltage_band

    trip_t = next(e.t for e in record.events if e.kind == "generator_trip")
    frames = record.frames
    before = next(f for f in frames if f.timestamp >= trip_t - 0.2)

    nadir = min((f.load_bus.voltage_rms, f.timestamp)
                for f in frames if f.timestamp >= trip_t)
    reentry = None
    for f in frames:
        if f.timestamp <= trip_t:
            continue
        if lo <= f.load_bus.voltage_rms <= hi:
            if reentry is None:
                reentry = f.timestamp
        else:
            reentry = None
    shed_lines = [ln for ln in record.decision_lines if "shed " in ln]

    final = frames[-1]
    print(f"scenario: {record.name} ({record.frame_count} frames)")
    print(f"trip at t={trip_t:.3f} s")
    print(f"pre-trip split:  gen1 {before.generators['gen1'].real_power:6.1f} W"
          f"  gen2 {before.generators['gen2'].real_power:6.1f} W")
    print(f"voltage nadir:   {nadir[0]:.1f} V at t={nadir[1]:.3f} s")
    if reentry is None:
        print("bus voltage never settled back inside the band")
    else:
        print(f"band re-entry:   t={reentry:.3f} s "
              f"({reentry - trip_t:.3f} s after the trip)")
    print(f"final state:     gen2 {final.generators['gen2'].real_power:6.1f} W"
          f"  bus {final.load_bus.voltage_rms:.1f} V")
    print(f"loads shed:      {len(shed_lines)}")


if __name__ == "__main__":
    main()
