"""Quasi-static phasor solve of the three-bus bench network.

Topology is fixed: each alternator feeds its own bus through the machine
breaker, both generator buses tie to the shared load bus through feeder
impedances, and the switched load elements hang off the load bus. Each
step solves the nodal equations for the buses energized by at least one
closed-breaker source; a de-energized island reports zero voltage and
zero branch currents.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

from ..config import GEN_IDS, LOAD_BUS, PlantConfig
from ..errors import NetworkSingularError

BUS_IDS = ("bus_gen1", "bus_gen2", LOAD_BUS)
_GEN_BUS = {"gen1": 0, "gen2": 1}
_LOAD_IDX = 2

_PIVOT_EPS = 1.0e-12


def solve_linear(matrix: list[list[complex]],
                 rhs: list[complex]) -> list[complex]:
    """Gaussian elimination with partial pivoting on a small dense system.

    Raises NetworkSingularError when a pivot vanishes relative to the
    matrix scale.
    """
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    scale = max((abs(v) for row in matrix for v in row), default=0.0)
    if scale == 0.0:
        raise NetworkSingularError("admittance matrix is zero",
                                   buses=BUS_IDS)
    for col in range(n):
        pivot_row = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[pivot_row][col]) <= _PIVOT_EPS * scale:
            raise NetworkSingularError(
                "admittance matrix is singular", buses=BUS_IDS)
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
        inv = 1.0 / a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] * inv
            if factor != 0:
                for c in range(col, n + 1):
                    a[r][c] -= factor * a[col][c]
    out = [0j] * n
    for row in range(n - 1, -1, -1):
        acc = a[row][n]
        for c in range(row + 1, n):
            acc -= a[row][c] * out[c]
        out[row] = acc / a[row][row]
    return out


@dataclass(frozen=True)
class NetworkSolution:
    """Full solve output used by the plant step and the device rack."""

    bus_voltages: dict[str, complex]
    terminal_voltages: dict[str, complex]
    stator_currents: dict[str, complex]
    line_currents: dict[str, complex]
    load_currents: dict[str, complex]
    feeder_current: complex
    airgap_power: dict[str, float]
    kcl_residual: float
    energized: bool


@dataclass(frozen=True)
class NetworkState:
    """Published network snapshot: voltages, branch currents, frequency.

    branch_currents carries one entry per stator branch (generator id),
    feeder (line) branch, and closed load element. frequency is the
    electrical frequency measured at the load bus, stamped by whoever
    owns the measurement history.
    """

    bus_voltages: dict[str, complex]
    branch_currents: dict[str, complex]
    frequency: float = field(default=float("nan"))


def solve_network(cfg: PlantConfig, emf: dict[str, complex],
                  closed_breakers: frozenset[str] | set[str],
                  closed_relays: frozenset[str] | set[str]) -> NetworkSolution:
    """Solve the phasor network for the given sources and switch states.

    emf maps generator id to its internal EMF phasor. Breakers gate the
    stator branches, relays gate load elements. Machines with open
    breakers contribute nothing; their terminal reads their own EMF.
    """
    sources = [gid for gid in GEN_IDS if gid in closed_breakers]
    loads = [el for el in cfg.loads if el.relay_id in closed_relays]

    if not sources:
        zero = 0.0 + 0.0j
        return NetworkSolution(
            bus_voltages={bus: zero for bus in BUS_IDS},
            terminal_voltages={gid: emf[gid] for gid in GEN_IDS},
            stator_currents={gid: zero for gid in GEN_IDS},
            line_currents={gid: zero for gid in GEN_IDS},
            load_currents={el.id: zero for el in cfg.loads},
            feeder_current=zero,
            airgap_power={gid: 0.0 for gid in GEN_IDS},
            kcl_residual=0.0,
            energized=False,
        )

    y = [[0j, 0j, 0j], [0j, 0j, 0j], [0j, 0j, 0j]]
    inj = [0j, 0j, 0j]
    for gid in GEN_IDS:
        bus = _GEN_BUS[gid]
        y_line = 1.0 / cfg.lines[gid]
        y[bus][bus] += y_line
        y[_LOAD_IDX][_LOAD_IDX] += y_line
        y[bus][_LOAD_IDX] -= y_line
        y[_LOAD_IDX][bus] -= y_line
    for el in loads:
        y[_LOAD_IDX][_LOAD_IDX] += 1.0 / el.impedance
    for gid in sources:
        bus = _GEN_BUS[gid]
        m = cfg.machines[gid]
        y_src = 1.0 / complex(m.stator_resistance, m.synchronous_reactance)
        y[bus][bus] += y_src
        inj[bus] += emf[gid] * y_src

    volts = solve_linear(y, inj)
    bus_voltages = {bus: volts[i] for i, bus in enumerate(BUS_IDS)}

    stator = {}
    terminal = {}
    airgap = {}
    line = {}
    for gid in GEN_IDS:
        bus_v = volts[_GEN_BUS[gid]]
        if gid in sources:
            m = cfg.machines[gid]
            z_s = complex(m.stator_resistance, m.synchronous_reactance)
            current = (emf[gid] - bus_v) / z_s
            stator[gid] = current
            terminal[gid] = bus_v
            airgap[gid] = (emf[gid] * current.conjugate()).real
        else:
            stator[gid] = 0j
            terminal[gid] = emf[gid]
            airgap[gid] = 0.0
        line[gid] = (bus_v - volts[_LOAD_IDX]) / cfg.lines[gid]

    load_currents = {}
    feeder = 0j
    for el in cfg.loads:
        if el.relay_id in closed_relays:
            current = volts[_LOAD_IDX] / el.impedance
        else:
            current = 0j
        load_currents[el.id] = current
        feeder += current

    residual = 0.0
    for gid in GEN_IDS:
        residual = max(residual, abs(stator[gid] - line[gid]))
    residual = max(residual,
                   abs(sum(line.values()) - feeder))

    return NetworkSolution(
        bus_voltages=bus_voltages,
        terminal_voltages=terminal,
        stator_currents=stator,
        line_currents=line,
        load_currents=load_currents,
        feeder_current=feeder,
        airgap_power=airgap,
        kcl_residual=residual,
        energized=True,
    )


def network_state(solution: NetworkSolution,
                  frequency: float = float("nan")) -> NetworkState:
    """Collapse a solve into the published snapshot form."""
    branches: dict[str, complex] = {}
    for gid in GEN_IDS:
        branches[f"stator_{gid}"] = solution.stator_currents[gid]
        branches[f"line_{gid}"] = solution.line_currents[gid]
    for el_id, current in solution.load_currents.items():
        branches[f"load_{el_id}"] = current
    return NetworkState(
        bus_voltages=dict(solution.bus_voltages),
        branch_currents=branches,
        frequency=frequency,
    )
