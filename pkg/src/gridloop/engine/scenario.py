"""Scenario documents: schema, validation, and loading.

A scenario is one YAML mapping with a schema_version field. Validation
returns every problem found rather than stopping at the first, so a
reviewer sees the whole damage in one pass.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from ..config import (
    GEN_IDS,
    ControllerConfig,
    PlantConfig,
    breaker_id,
    merged,
)
from ..devices.rack import BIAS_CHANNELS
from ..errors import ConfigError, ScenarioError

SCHEMA_VERSION = 1

EVENT_KINDS = ("load_step", "relay_force", "generator_trip",
               "sensor_bias", "operator_command")

COMMAND_KINDS = ("relay_set", "breaker_set", "sync_request",
                 "setpoint_change", "reset_trip", "generator_trip",
                 "generator_start")

INITIAL_MODES = ("offline", "running", "tripped")

HIGH_RATE_CHANNELS: tuple[str, ...] = tuple(
    [f"{gid}.{q}" for gid in GEN_IDS for q in (
        "rotor_speed", "rotor_angle", "internal_emf", "armature_current",
        "terminal_voltage", "stator_current")]
    + ["load_bus.voltage", "load_bus.feeder_current"])


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    params: dict


@dataclass
class Scenario:
    name: str
    seed: int
    duration: float
    plant: PlantConfig
    controller: ControllerConfig
    initial_breakers: frozenset[str]
    initial_relays: frozenset[str]
    initial_modes: dict[str, str]
    events: tuple[Event, ...] = ()
    high_rate: tuple[str, ...] = ()
    raw: dict = field(default_factory=dict)

    @property
    def steps_per_period(self) -> int:
        return round(self.controller.control_period_s
                     / self.plant.integration_dt_s)

    @classmethod
    def load(cls, path: str) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        return parse_scenario(doc)


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_event(event: dict, index: int, duration: float,
                 relay_ids: set[str], problems: list[str]) -> Event | None:
    where = f"events[{index}]"
    if not isinstance(event, dict):
        problems.append(f"{where}: must be a mapping")
        return None
    t = event.get("t")
    kind = event.get("kind")
    if not _is_number(t) or t < 0 or t > duration:
        problems.append(f"{where}: t must be a number in [0, duration]")
        return None
    if kind not in EVENT_KINDS:
        problems.append(f"{where}: unknown kind {kind!r}")
        return None
    params = {k: v for k, v in event.items() if k not in ("t", "kind")}
    device_ids = relay_ids | {breaker_id(g) for g in GEN_IDS}
    if kind == "load_step":
        if params.get("relay") not in relay_ids:
            problems.append(f"{where}: relay must name a configured load")
        if not isinstance(params.get("closed"), bool):
            problems.append(f"{where}: closed must be a boolean")
    elif kind == "relay_force":
        if params.get("device") not in device_ids:
            problems.append(f"{where}: device must name a relay or breaker")
        if not isinstance(params.get("closed"), bool):
            problems.append(f"{where}: closed must be a boolean")
    elif kind == "generator_trip":
        if params.get("generator") not in GEN_IDS:
            problems.append(f"{where}: generator must be one of "
                            f"{', '.join(GEN_IDS)}")
    elif kind == "sensor_bias":
        if params.get("channel") not in BIAS_CHANNELS:
            problems.append(f"{where}: unknown sensor channel")
        if not _is_number(params.get("bias")):
            problems.append(f"{where}: bias must be a number")
    elif kind == "operator_command":
        if params.get("command") not in COMMAND_KINDS:
            problems.append(f"{where}: unknown operator command")
        if not isinstance(params.get("target"), str):
            problems.append(f"{where}: target must be a string")
        value = params.get("value")
        if value is not None and not isinstance(value, (int, float, bool)):
            problems.append(f"{where}: value must be a number or boolean")
    return Event(t=float(t), kind=kind, params=params)


def _build(doc: object) -> tuple[Scenario | None, list[str]]:
    problems: list[str] = []
    if not isinstance(doc, dict):
        return None, ["scenario must be a mapping"]
    if doc.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version must be {SCHEMA_VERSION}")

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        problems.append("name must be a non-empty string")
        name = "unnamed"
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append("seed must be an integer")
        seed = 0
    duration = doc.get("duration")
    if not _is_number(duration) or duration < 0:
        problems.append("duration must be a number >= 0")
        duration = 0.0

    plant = None
    controller = None
    try:
        plant = merged(PlantConfig(), doc.get("plant") or {})
    except ConfigError as exc:
        problems.append(f"plant: {exc}")
    try:
        controller = merged(ControllerConfig(), doc.get("controller") or {})
    except ConfigError as exc:
        problems.append(f"controller: {exc}")
    if plant is None or controller is None:
        return None, problems

    ratio = controller.control_period_s / plant.integration_dt_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        problems.append("control_period_s must be an integer multiple of "
                        "integration_dt_s")

    relay_ids = {el.relay_id for el in plant.loads}
    order = tuple(controller.shedding_order) or plant.shed_order()
    if sorted(order) != sorted(relay_ids):
        problems.append("shedding_order must be a permutation of the "
                        "configured load relay ids")
    else:
        controller = dataclasses.replace(controller, shedding_order=order)

    initial = doc.get("initial") or {}
    if not isinstance(initial, dict):
        problems.append("initial must be a mapping")
        initial = {}
    breakers = initial.get("breakers", list(GEN_IDS))
    relays = initial.get("relays", [])
    modes = initial.get("modes", {})
    if not isinstance(breakers, list) or not set(breakers) <= set(GEN_IDS):
        problems.append("initial.breakers must list generator ids")
        breakers = []
    if not isinstance(relays, list) or not set(relays) <= relay_ids:
        problems.append("initial.relays must list configured load relay ids")
        relays = []
    if not isinstance(modes, dict):
        problems.append("initial.modes must be a mapping")
        modes = {}
    full_modes = {gid: "running" for gid in GEN_IDS}
    for gid, mode in modes.items():
        if gid not in GEN_IDS:
            problems.append(f"initial.modes: unknown generator {gid!r}")
        elif mode not in INITIAL_MODES:
            problems.append(f"initial.modes.{gid}: must be one of "
                            f"{', '.join(INITIAL_MODES)}")
        else:
            full_modes[gid] = mode
    for gid in breakers:
        if full_modes.get(gid) != "running":
            problems.append(f"initial: {gid} has a closed breaker but mode "
                            f"{full_modes.get(gid)!r}; closed implies running")

    raw_events = doc.get("events", [])
    events: list[Event] = []
    if not isinstance(raw_events, list):
        problems.append("events must be a list")
    else:
        for index, raw in enumerate(raw_events):
            event = _check_event(raw, index, float(duration), relay_ids,
                                 problems)
            if event is not None:
                events.append(event)
        times = [e.t for e in events]
        if times != sorted(times):
            problems.append("events must be sorted by t")

    high_rate = doc.get("high_rate", [])
    if not isinstance(high_rate, list) or not set(high_rate) <= set(
            HIGH_RATE_CHANNELS):
        problems.append("high_rate must list known channels; valid: "
                        + ", ".join(HIGH_RATE_CHANNELS))
        high_rate = []

    if problems:
        return None, problems
    scenario = Scenario(
        name=name,
        seed=seed,
        duration=float(duration),
        plant=plant,
        controller=controller,
        initial_breakers=frozenset(breakers),
        initial_relays=frozenset(relays),
        initial_modes=full_modes,
        events=tuple(events),
        high_rate=tuple(high_rate),
        raw=doc,
    )
    return scenario, []


def validate_scenario(doc: object) -> list[str]:
    """Every problem in the document; empty means it parses."""
    _, problems = _build(doc)
    return problems


def parse_scenario(doc: object) -> Scenario:
    scenario, problems = _build(doc)
    if scenario is None:
        raise ScenarioError("; ".join(problems))
    return scenario
