"""The closed loop: sample, decide, actuate, step the plant.

Each control period runs exactly once per controller period of
simulated time: the rack samples a telemetry frame, the supervisor
decides, actuators and due events apply, then the plant integrates a
fixed number of sub-steps. Everything that leaves the loop (frames,
decision lines, applied events) feeds one hash, so two runs of the same
scenario must produce the same digest.

Divergence mid-run does not raise out of the loop: the record is
truncated at the failing step and carries a structured diagnostic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from ..config import GEN_IDS, ControllerConfig, PlantConfig
from ..control.supervisor import (
    ControllerDecision,
    ControllerState,
    OperatorCommand,
    controller_step,
    decision_line,
    initial_state,
)
from ..devices.rack import DeviceRack
from ..devices.telemetry import TelemetryFrame
from ..errors import (
    DegenerateSpeedError,
    IntegrationDivergenceError,
    NetworkSingularError,
)
from ..plant.converter import BuckConverter, buck_output
from ..plant.equilibrium import initial_steady_state
from ..plant.network import NetworkSolution
from ..plant.system import PlantInputs, PlantModel, SetState
from .scenario import Event, Scenario, _check_event
from .streams import stream_factory

_PLANT_ERRORS = (IntegrationDivergenceError, NetworkSingularError,
                 DegenerateSpeedError)


@dataclass
class EnergyLedger:
    """Trapezoid integrals of every power flow over the whole run."""

    mechanical: float = 0.0
    damping: float = 0.0
    load: float = 0.0
    line_loss: float = 0.0
    stator_loss: float = 0.0
    kinetic_start: float = 0.0
    kinetic_end: float = 0.0

    @property
    def absorbed(self) -> float:
        return self.damping + self.load + self.line_loss + self.stator_loss

    @property
    def residual(self) -> float:
        return (self.mechanical - self.absorbed
                - (self.kinetic_end - self.kinetic_start))

    @property
    def balance_error(self) -> float:
        scale = max(self.mechanical, self.absorbed, 1.0e-9)
        return abs(self.residual) / scale


@dataclass(frozen=True)
class AppliedEvent:
    t: float
    kind: str
    params: dict
    source: str  # "scenario" | "injected"


@dataclass
class SimulationRecord:
    name: str
    seed: int
    control_period_s: float
    integration_dt_s: float
    frames: list[TelemetryFrame]
    decisions: list[ControllerDecision]
    decision_lines: list[str]
    events: list[AppliedEvent]
    high_rate: dict[str, list[float]]
    digest: str
    energy: EnergyLedger
    kcl_max: float
    diagnostic: dict | None
    scenario_doc: dict = field(default_factory=dict)

    @property
    def frame_count(self) -> int:
        return len(self.frames)


def _canonical_frame(frame: TelemetryFrame) -> bytes:
    return json.dumps(frame.as_dict(), sort_keys=True,
                      separators=(",", ":")).encode()


class Simulation:
    """One prepared run; step it period by period or drain it with run()."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.plant_cfg: PlantConfig = scenario.plant
        self.ctrl_cfg: ControllerConfig = scenario.controller
        self.period = self.ctrl_cfg.control_period_s
        self.dt = self.plant_cfg.integration_dt_s
        self.steps_per_period = scenario.steps_per_period
        self.total_periods = round(scenario.duration / self.period)

        self.model = PlantModel(self.plant_cfg)
        self.rack = DeviceRack(self.plant_cfg, self.period,
                               stream_factory(scenario.seed))
        self.rack.set_initial_topology(set(scenario.initial_breakers),
                                       set(scenario.initial_relays))
        init = initial_steady_state(self.plant_cfg, self.ctrl_cfg,
                                    self.rack.topology(),
                                    scenario.initial_modes)
        self.sets: dict[str, SetState] = init.sets
        self.ctrl_state: ControllerState = initial_state(
            self.ctrl_cfg, scenario.initial_modes,
            init.excitation_duty, init.armature_duty)
        self.inputs = self._actuate(init.excitation_duty, init.armature_duty)

        self._relay_ids = {el.relay_id for el in self.plant_cfg.loads}
        self._event_index = 0
        self._injected: list[Event] = []
        self._period_index = 0
        self.finished = self.total_periods == 0

        self._hasher = hashlib.sha256()
        self._frames: list[TelemetryFrame] = []
        self._decisions: list[ControllerDecision] = []
        self._lines: list[str] = []
        self._event_log: list[AppliedEvent] = []
        self._high_rate: dict[str, list[float]] = {
            ch: [] for ch in scenario.high_rate}
        self._energy = EnergyLedger(
            kinetic_start=self.model.kinetic_energy(self.sets))
        self._prev_powers: tuple[float, ...] | None = None
        self._kcl_max = 0.0
        self._diagnostic: dict | None = None

    @property
    def latest_frame(self) -> TelemetryFrame | None:
        return self._frames[-1] if self._frames else None

    @property
    def boundary_time(self) -> float:
        """Timestamp of the next frame; live injections land here."""
        return self._period_index * self.period

    # -- actuation ----------------------------------------------------

    def _actuate(self, excitation: dict[str, float],
                 armature: dict[str, float]) -> PlantInputs:
        rails = self.plant_cfg.rails
        return PlantInputs(
            armature_voltage={
                g: buck_output(BuckConverter(armature[g],
                                             rails.armature_voltage))
                for g in GEN_IDS},
            gen_field_voltage={
                g: buck_output(BuckConverter(excitation[g],
                                             rails.excitation_voltage))
                for g in GEN_IDS},
            motor_field_supply={
                g: rails.motor_field_voltage for g in GEN_IDS},
        )

    # -- events -------------------------------------------------------

    def inject_event(self, kind: str, params: dict) -> tuple[bool, str]:
        """Queue a live event for the next boundary. Rejections leave the
        run, its log, and its digest untouched."""
        if self.finished:
            return False, "run finished"
        t_next = self._period_index * self.period
        doc = {"t": t_next, "kind": kind, **params}
        problems: list[str] = []
        event = _check_event(doc, 0, max(self.scenario.duration, t_next),
                             self._relay_ids, problems)
        if problems or event is None:
            return False, "; ".join(problems) or "malformed event"
        self._injected.append(event)
        return True, "queued"

    def _apply_event(self, event: Event, t: float, source: str) -> None:
        params = event.params
        if event.kind == "load_step":
            self.rack.force(params["relay"], params["closed"])
        elif event.kind == "relay_force":
            self.rack.force(params["device"], params["closed"])
        elif event.kind == "generator_trip":
            self.ctrl_state.pending_commands.append(
                OperatorCommand("generator_trip", params["generator"]))
        elif event.kind == "sensor_bias":
            self.rack.set_bias(params["channel"], params["bias"])
        elif event.kind == "operator_command":
            self.ctrl_state.pending_commands.append(OperatorCommand(
                kind=params["command"], target=params["target"],
                value=params.get("value"),
                request_id=params.get("request_id")))
        applied = AppliedEvent(t=t, kind=event.kind, params=dict(params),
                               source=source)
        self._event_log.append(applied)
        self._hasher.update(
            (f"event t={t:.6f} kind={event.kind} "
             f"params={json.dumps(applied.params, sort_keys=True)}\n"
             ).encode())

    # -- stepping -----------------------------------------------------

    def step_period(self) -> tuple[TelemetryFrame, ControllerDecision] | None:
        """Advance one control period; None once the run is over."""
        if self.finished:
            return None
        t = self._period_index * self.period
        snapshot = self.model.snapshot(self.sets, self.inputs,
                                       self.rack.topology())
        frame = self.rack.sample(t, snapshot)
        self.ctrl_state, decision = controller_step(
            frame, self.ctrl_state, self.ctrl_cfg)
        line = decision_line(t, self.ctrl_state, decision)

        self._frames.append(frame)
        self._decisions.append(decision)
        self._lines.append(line)
        self._hasher.update(_canonical_frame(frame))
        self._hasher.update(b"\n")
        self._hasher.update(line.encode())
        self._hasher.update(b"\n")

        for device, action in decision.relay_commands:
            self.rack.command(device, action == "closed", self.dt)
        for device, action in decision.breaker_commands:
            self.rack.command(device, action == "closed", self.dt)
        self.inputs = self._actuate(decision.excitation_duty,
                                    decision.armature_duty)

        events = self.scenario.events
        while (self._event_index < len(events)
               and events[self._event_index].t <= t + 1.0e-12):
            self._apply_event(events[self._event_index], t, "scenario")
            self._event_index += 1
        for event in self._injected:
            self._apply_event(event, t, "injected")
        self._injected = []

        try:
            for _ in range(self.steps_per_period):
                self.rack.step_relays()
                topology = self.rack.topology()
                before = self.sets
                self.sets, solution = self.model.heun_step(
                    before, self.inputs, topology, self.dt)
                self._account(before, solution)
        except _PLANT_ERRORS as exc:
            self._diagnostic = {
                "period": self._period_index,
                "t": t,
                "error": type(exc).__name__,
                "message": str(exc),
            }
            self.finished = True
            return frame, decision

        self._period_index += 1
        if self._period_index >= self.total_periods:
            self.finished = True
        return frame, decision

    def _account(self, before: dict[str, SetState],
                 solution: NetworkSolution) -> None:
        self._kcl_max = max(self._kcl_max, solution.kcl_residual)
        powers = self.model.power_flows(before, self.inputs, solution)
        current = (powers.mechanical, powers.damping, powers.load,
                   powers.line_loss, powers.stator_loss)
        if self._prev_powers is not None:
            prev = self._prev_powers
            half_dt = 0.5 * self.dt
            self._energy.mechanical += (prev[0] + current[0]) * half_dt
            self._energy.damping += (prev[1] + current[1]) * half_dt
            self._energy.load += (prev[2] + current[2]) * half_dt
            self._energy.line_loss += (prev[3] + current[3]) * half_dt
            self._energy.stator_loss += (prev[4] + current[4]) * half_dt
        self._prev_powers = current
        for channel, series in self._high_rate.items():
            series.append(self._channel_value(channel, before, solution))

    def _channel_value(self, channel: str, sets: dict[str, SetState],
                       solution: NetworkSolution) -> float:
        owner, _, quantity = channel.partition(".")
        if owner == "load_bus":
            if quantity == "voltage":
                return abs(solution.bus_voltages["load_bus"])
            return abs(solution.feeder_current)
        st = sets[owner]
        if quantity == "rotor_speed":
            return st.rotor_speed
        if quantity == "rotor_angle":
            return st.rotor_angle
        if quantity == "internal_emf":
            return st.internal_emf
        if quantity == "armature_current":
            return st.armature_current
        if quantity == "terminal_voltage":
            return abs(solution.terminal_voltages[owner])
        return abs(solution.stator_currents[owner])

    # -- results ------------------------------------------------------

    def finalize(self) -> SimulationRecord:
        if self._prev_powers is not None and self._diagnostic is None:
            # close the trapezoid at the final state
            try:
                solution = self.model.solve(self.sets, self.rack.topology())
                powers = self.model.power_flows(self.sets, self.inputs,
                                                solution)
                current = (powers.mechanical, powers.damping, powers.load,
                           powers.line_loss, powers.stator_loss)
                prev = self._prev_powers
                half_dt = 0.5 * self.dt
                self._energy.mechanical += (prev[0] + current[0]) * half_dt
                self._energy.damping += (prev[1] + current[1]) * half_dt
                self._energy.load += (prev[2] + current[2]) * half_dt
                self._energy.line_loss += (prev[3] + current[3]) * half_dt
                self._energy.stator_loss += (prev[4] + current[4]) * half_dt
                self._kcl_max = max(self._kcl_max, solution.kcl_residual)
                self._prev_powers = None
            except _PLANT_ERRORS:
                pass
        self._energy.kinetic_end = self.model.kinetic_energy(self.sets)
        return SimulationRecord(
            name=self.scenario.name,
            seed=self.scenario.seed,
            control_period_s=self.period,
            integration_dt_s=self.dt,
            frames=self._frames,
            decisions=self._decisions,
            decision_lines=self._lines,
            events=self._event_log,
            high_rate=self._high_rate,
            digest=self._hasher.hexdigest(),
            energy=self._energy,
            kcl_max=self._kcl_max,
            diagnostic=self._diagnostic,
            scenario_doc=self.scenario.raw,
        )

    def run(self) -> SimulationRecord:
        while not self.finished:
            self.step_period()
        return self.finalize()
