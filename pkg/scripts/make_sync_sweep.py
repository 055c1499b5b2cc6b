#!/usr/bin/env python3
"""Regenerate scenarios/sync_sweep.yaml.

Generator 2 runs unparalleled while its speed setpoint walks from 30 RPM
below nominal to 30 RPM above (one full hertz each way at two pole
pairs). A sync request fires every quarter second and a scripted breaker
open undoes any successful close shortly after, so the permissive logic
is exercised across the whole slip range. With assist off, closes can
only happen where the setpoint puts the residuals inside tolerance.
"""

import os

HEADER = """\
# Synchronization sweep: gen2 slews through -1..+1 Hz of slip against
# the gen1-held bus while sync requests fire continuously. Scripted
# breaker opens re-arm the attempt after every successful close.
# Generated by scripts/make_sync_sweep.py; edit that, not this.
schema_version: 1
name: sync-sweep
seed: 20260214
duration: 21.0
controller:
  sync_assist: false
initial:
  breakers: [gen1]
  relays: [L1, L2]
events:
"""

# Five RPM of setpoint offset is one sixth of a hertz of slip, so the
# relative phase takes six seconds to wrap. The two in-tolerance
# setpoints dwell for seven so the permissive window is guaranteed to
# pass at least once; the out-of-tolerance ones only need to be visited.
RAMP = ((0.0, 1370.0), (0.5, 1375.0), (1.0, 1380.0), (1.5, 1385.0),
        (2.0, 1390.0), (2.5, 1395.0), (9.5, 1400.0), (10.5, 1405.0),
        (17.5, 1410.0), (18.0, 1415.0), (18.5, 1420.0), (19.0, 1425.0),
        (19.5, 1430.0))
DURATION_S = 21.0
REQUEST_EVERY_S = 0.25
OPEN_OFFSET_S = 0.125


def events() -> list[tuple[float, str]]:
    out: list[tuple[float, str]] = []
    for t, rpm in RAMP:
        out.append((t, "{kind: operator_command, command: setpoint_change, "
                       f"target: gen2.speed_rpm, value: {rpm:.1f}}}"))
    t = REQUEST_EVERY_S
    while t < DURATION_S:
        out.append((t, "{kind: operator_command, command: sync_request, "
                       "target: gen2}"))
        t += REQUEST_EVERY_S
    t = REQUEST_EVERY_S + OPEN_OFFSET_S
    while t < DURATION_S:
        out.append((t, "{kind: operator_command, command: breaker_set, "
                       "target: gen2, value: false}"))
        t += REQUEST_EVERY_S
    out.sort(key=lambda item: item[0])
    return out


def main() -> None:
    path = os.path.join(os.path.dirname(__file__), os.pardir,
                        "scenarios", "sync_sweep.yaml")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER)
        for t, body in events():
            fh.write(f"  - {{t: {t:.3f}, {body[1:]}\n")
    print(f"wrote {os.path.normpath(path)} ({len(events())} events)")


if __name__ == "__main__":
    main()
