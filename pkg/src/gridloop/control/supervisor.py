"""Protection and regulation supervisor.

Runs once per control period on the latest telemetry frame. Evaluation
order is fixed: operator requests, then limit checks, fault
confirmation and isolation, load shedding, regulation, and finally
synchronization supervision. The step is a pure function of
(frame, state, config); the engine owns the state and passes it by
value.

Shedding is measurement driven. After commanding a relay open the
supervisor waits for the frame to show it open before deciding whether
the next stage must go too, so switchgear actuation delay never causes
over-shedding. A commanded relay that fails to open within the holdoff
window is abandoned and the next candidate is tried, which keeps a
stuck switch from blocking the episode.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

from ..config import GEN_IDS, LOAD_BUS, ControllerConfig, breaker_id
from ..devices.telemetry import GeneratorTelemetry, LoadBusTelemetry, TelemetryFrame
from .pi import pi_step


class GenMode(str, Enum):
    OFFLINE = "offline"
    RUNNING = "running"
    SYNCHRONIZING = "synchronizing"
    TRIPPED = "tripped"


class SystemMode(str, Enum):
    NORMAL = "normal"
    ALERT = "alert"
    SHEDDING = "shedding"
    ISLAND = "island"


_REGULATED = (GenMode.RUNNING, GenMode.SYNCHRONIZING)


@dataclass(frozen=True)
class Violation:
    """One quantity outside one bound, tagged by severity band."""

    quantity: str
    value: float
    bound: float
    side: str  # "over" | "under"
    band: str  # "permissible" | "beyond"

    def describe(self) -> str:
        sym = ">" if self.side == "over" else "<"
        return (f"limit:{self.quantity}={self.value:.2f}"
                f"{sym}{self.bound:.2f}:{self.band}")


@dataclass(frozen=True)
class SyncCheck:
    permissive: bool
    voltage_residual: float
    frequency_residual_hz: float
    phase_residual_deg: float
    dead_bus: bool


@dataclass(frozen=True)
class OperatorCommand:
    """A mediated request; the supervisor may refuse it with a reason."""

    kind: str
    target: str
    value: float | bool | None = None
    request_id: str | None = None


@dataclass(frozen=True)
class ControllerDecision:
    excitation_duty: dict[str, float]
    armature_duty: dict[str, float]
    relay_commands: tuple[tuple[str, str], ...] = ()
    breaker_commands: tuple[tuple[str, str], ...] = ()
    sync_close: tuple[str, str] | None = None
    annotations: tuple[str, ...] = ()


@dataclass
class ControllerState:
    modes: dict[str, GenMode]
    system_mode: SystemMode = SystemMode.NORMAL
    voltage_setpoints: dict[str, float] = field(default_factory=dict)
    speed_setpoints: dict[str, float] = field(default_factory=dict)
    exc_integrators: dict[str, float] = field(default_factory=dict)
    spd_integrators: dict[str, float] = field(default_factory=dict)
    violation_counters: dict[str, int] = field(default_factory=dict)
    sync_counters: dict[str, int] = field(default_factory=dict)
    sync_targets: dict[str, tuple[float, float]] = field(default_factory=dict)
    shed_episode: bool = False
    shed_relays: tuple[str, ...] = ()
    shed_pending: str | None = None
    shed_wait: int = 0
    pending_commands: list[OperatorCommand] = field(default_factory=list)
    last_timestamp: float | None = None
    stale_frames: int = 0
    last_excitation: dict[str, float] = field(default_factory=dict)
    last_armature: dict[str, float] = field(default_factory=dict)

    def copy(self) -> "ControllerState":
        return dataclasses.replace(
            self,
            modes=dict(self.modes),
            voltage_setpoints=dict(self.voltage_setpoints),
            speed_setpoints=dict(self.speed_setpoints),
            exc_integrators=dict(self.exc_integrators),
            spd_integrators=dict(self.spd_integrators),
            violation_counters=dict(self.violation_counters),
            sync_counters=dict(self.sync_counters),
            sync_targets=dict(self.sync_targets),
            pending_commands=list(self.pending_commands),
            last_excitation=dict(self.last_excitation),
            last_armature=dict(self.last_armature),
        )


def initial_state(cfg: ControllerConfig, modes: dict[str, str],
                  excitation_duty: dict[str, float],
                  armature_duty: dict[str, float]) -> ControllerState:
    """State matching an equilibrium start: integrators preloaded so the
    first regulated period reproduces the equilibrium duties."""
    coerced = {gid: GenMode(modes.get(gid, "offline")) for gid in GEN_IDS}
    exc_int = {}
    spd_int = {}
    for gid in GEN_IDS:
        if coerced[gid] in _REGULATED:
            exc_int[gid] = excitation_duty[gid] - cfg.excitation_gains.bias
            spd_int[gid] = armature_duty[gid] - cfg.speed_gains.bias
        else:
            exc_int[gid] = 0.0
            spd_int[gid] = 0.0
    return ControllerState(
        modes=coerced,
        voltage_setpoints={g: cfg.voltage_setpoint for g in GEN_IDS},
        speed_setpoints={g: cfg.speed_setpoint_rpm for g in GEN_IDS},
        exc_integrators=exc_int,
        spd_integrators=spd_int,
        last_excitation=dict(excitation_duty),
        last_armature=dict(armature_duty),
    )


def check_limits(frame: TelemetryFrame,
                 cfg: ControllerConfig) -> list[Violation]:
    """All (quantity, bound) excursions in one frame.

    Band and frequency excursions within permissible_band_factor times
    their band are tagged permissible (regulation corrects them); past
    the factor they are beyond-band and count toward confirmation.
    """
    out: list[Violation] = []

    def banded(quantity: str, value: float, center: float,
               span: float) -> None:
        dev = value - center
        if abs(dev) <= span:
            return
        band = ("beyond" if abs(dev) > span * cfg.permissible_band_factor
                else "permissible")
        if dev > 0:
            out.append(Violation(quantity, value, center + span, "over", band))
        else:
            out.append(Violation(quantity, value, center - span, "under", band))

    def over_limit(quantity: str, value: float, limit: float) -> None:
        if value <= limit:
            return
        band = ("beyond" if value > limit * cfg.permissible_band_factor
                else "permissible")
        out.append(Violation(quantity, value, limit, "over", band))

    banded("load_bus.voltage_rms", frame.load_bus.voltage_rms,
           cfg.voltage_setpoint, cfg.voltage_band)
    banded("load_bus.frequency", frame.load_bus.frequency,
           cfg.nominal_frequency_hz, cfg.frequency_band_hz)
    over_limit("load_bus.current_rms", frame.load_bus.current_rms,
               cfg.branch_current_limit_a)
    for gid in GEN_IDS:
        over_limit(f"{gid}.current_rms",
                   frame.generators[gid].current_rms,
                   cfg.gen_current_limit_a)
    return out


def regulate_excitation(gains, error: float, integrator: float,
                        dt: float) -> tuple[float, float]:
    """Voltage-loop PI update; see pi_step for the windup rule."""
    return pi_step(gains, error, integrator, dt)


def sync_check(gen: GeneratorTelemetry, bus: LoadBusTelemetry,
               cfg: ControllerConfig) -> SyncCheck:
    """Instantaneous paralleling residuals for one machine against the bus.

    A dead bus is reported distinctly: the permissive then follows the
    dead-bus-close policy and only requires the incoming machine to hold
    the voltage setpoint.
    """
    v_nom = cfg.voltage_setpoint
    dead = bus.voltage_rms < cfg.dead_bus_voltage_frac * v_nom
    f_gen = gen.speed_rpm * cfg.pole_pairs / 60.0
    df = abs(f_gen - bus.frequency)
    dph = abs(gen.phase_deg)
    if dead:
        dv = abs(gen.voltage_rms - v_nom) / v_nom
        permissive = cfg.dead_bus_close and dv <= cfg.sync_voltage_tol
    else:
        dv = abs(gen.voltage_rms - bus.voltage_rms) / v_nom
        permissive = (dv <= cfg.sync_voltage_tol
                      and df <= cfg.sync_frequency_tol_hz
                      and dph <= cfg.sync_phase_tol_deg)
    return SyncCheck(permissive=permissive, voltage_residual=dv,
                     frequency_residual_hz=df, phase_residual_deg=dph,
                     dead_bus=dead)


def _sync_refusal(chk: SyncCheck, confirmed: bool,
                  cfg: ControllerConfig) -> str | None:
    """Why a breaker close is blocked right now, or None if clear."""
    if chk.dead_bus and not cfg.dead_bus_close:
        return "dead bus"
    if chk.voltage_residual > cfg.sync_voltage_tol:
        return "voltage residual"
    if not chk.dead_bus and chk.frequency_residual_hz > cfg.sync_frequency_tol_hz:
        return "frequency residual"
    if not chk.dead_bus and chk.phase_residual_deg > cfg.sync_phase_tol_deg:
        return "phase residual"
    if not confirmed:
        return "confirmation pending"
    return None


def _normalize_gen(target: str) -> str | None:
    if target in GEN_IDS:
        return target
    if target.startswith("brk_") and target[4:] in GEN_IDS:
        return target[4:]
    return None


def _trip(work: ControllerState, gid: str, reason: str,
          breaker_cmds: list[tuple[str, str]], ann: list[str]) -> None:
    work.modes[gid] = GenMode.TRIPPED
    work.exc_integrators[gid] = 0.0
    work.spd_integrators[gid] = 0.0
    work.sync_counters.pop(gid, None)
    work.sync_targets.pop(gid, None)
    breaker_cmds.append((breaker_id(gid), "open"))
    ann.append(f"isolated {gid}: {reason}")
    others = [g for g in GEN_IDS
              if g != gid and work.modes[g] == GenMode.RUNNING]
    for other in others:
        ann.append(f"redispatch: {other} carries the system load")


def _apply_command(work: ControllerState, cmd: OperatorCommand,
                   frame: TelemetryFrame, cfg: ControllerConfig,
                   relay_cmds: list[tuple[str, str]],
                   breaker_cmds: list[tuple[str, str]],
                   ann: list[str]) -> None:
    def note(outcome: str) -> None:
        ann.append(f"cmd {cmd.kind} {cmd.target}: {outcome}")

    if cmd.kind == "relay_set":
        if cmd.target not in frame.relays:
            note("refused: unknown relay")
            return
        close = bool(cmd.value)
        if close and work.shed_episode and cmd.target in work.shed_relays:
            note("refused: shed episode active")
            return
        relay_cmds.append((cmd.target, "closed" if close else "open"))
        note("applied")
        return

    if cmd.kind == "breaker_set":
        gid = _normalize_gen(cmd.target)
        if gid is None:
            note("refused: unknown breaker")
            return
        close = bool(cmd.value)
        if not close:
            breaker_cmds.append((breaker_id(gid), "open"))
            note("applied")
            return
        if work.modes[gid] == GenMode.TRIPPED:
            note("refused: trip latched")
            return
        if work.modes[gid] != GenMode.SYNCHRONIZING:
            note("refused: sync blocked: not synchronizing")
            return
        chk = sync_check(frame.generators[gid], frame.load_bus, cfg)
        confirmed = (work.sync_counters.get(gid, 0)
                     >= cfg.sync_confirm_periods)
        reason = _sync_refusal(chk, confirmed, cfg)
        if reason is not None:
            note(f"refused: sync blocked: {reason}")
            return
        breaker_cmds.append((breaker_id(gid), "closed"))
        work.modes[gid] = GenMode.RUNNING
        work.sync_counters.pop(gid, None)
        work.sync_targets.pop(gid, None)
        note("applied")
        return

    if cmd.kind == "sync_request":
        gid = _normalize_gen(cmd.target)
        if gid is None:
            note("refused: unknown generator")
            return
        mode = work.modes[gid]
        if mode == GenMode.SYNCHRONIZING:
            note("no-op: already synchronizing")
        elif mode == GenMode.TRIPPED:
            note("refused: trip latched")
        elif mode == GenMode.OFFLINE:
            note("refused: machine offline")
        elif frame.generators[gid].breaker_closed:
            note("refused: breaker already closed")
        else:
            work.modes[gid] = GenMode.SYNCHRONIZING
            work.sync_counters[gid] = 0
            note("applied")
        return

    if cmd.kind == "generator_trip":
        gid = _normalize_gen(cmd.target)
        if gid is None:
            note("refused: unknown generator")
            return
        if work.modes[gid] == GenMode.TRIPPED:
            note("no-op: already tripped")
            return
        _trip(work, gid, "commanded trip", breaker_cmds, ann)
        note("applied")
        return

    if cmd.kind == "reset_trip":
        gid = _normalize_gen(cmd.target)
        if gid is None:
            note("refused: unknown generator")
            return
        if work.modes[gid] != GenMode.TRIPPED:
            note("no-op: not tripped")
            return
        work.modes[gid] = GenMode.OFFLINE
        for key in [k for k in work.violation_counters
                    if k.startswith(f"{gid}.")]:
            del work.violation_counters[key]
        note("applied")
        return

    if cmd.kind == "generator_start":
        gid = _normalize_gen(cmd.target)
        if gid is None:
            note("refused: unknown generator")
            return
        if work.modes[gid] != GenMode.OFFLINE:
            note(f"no-op: machine {work.modes[gid].value}")
            return
        work.modes[gid] = GenMode.RUNNING
        note("applied")
        return

    if cmd.kind == "setpoint_change":
        target = cmd.target
        if not isinstance(cmd.value, (int, float)) or cmd.value <= 0:
            note("refused: invalid value")
            return
        value = float(cmd.value)
        gid, _, channel = target.rpartition(".")
        gens = [gid] if gid else list(GEN_IDS)
        if channel not in ("voltage", "speed_rpm") or not all(
                g in GEN_IDS for g in gens):
            note("refused: unknown setpoint")
            return
        table = (work.voltage_setpoints if channel == "voltage"
                 else work.speed_setpoints)
        for g in gens:
            table[g] = value
        note(f"applied: {value:.2f}")
        return

    note("refused: unknown kind")


def _shedding(work: ControllerState, frame: TelemetryFrame,
              cfg: ControllerConfig, relay_cmds: list[tuple[str, str]],
              ann: list[str]) -> None:
    feeder = frame.load_bus.current_rms
    limit = cfg.branch_current_limit_a
    if not work.shed_episode:
        confirmed = (work.violation_counters.get("load_bus.current_rms", 0)
                     >= cfg.trip_confirm_periods)
        if not confirmed:
            return
        work.shed_episode = True
        ann.append(f"shed start: feeder {feeder:.2f} A beyond band")

    if work.shed_pending is not None:
        if not frame.relays.get(work.shed_pending, True):
            work.shed_pending = None
            work.shed_wait = 0
        else:
            work.shed_wait += 1
            if work.shed_wait >= cfg.shed_holdoff_periods:
                ann.append(f"shed {work.shed_pending} unconfirmed after "
                           f"{work.shed_wait} periods")
                work.shed_pending = None
                work.shed_wait = 0
            else:
                ann.append(f"shed {work.shed_pending} commanded, "
                           "awaiting open")
                return

    if work.shed_pending is not None:
        return
    if feeder > limit:
        candidates = [r for r in cfg.shedding_order
                      if r not in work.shed_relays
                      and frame.relays.get(r, False)]
        if candidates:
            target = candidates[0]
            relay_cmds.append((target, "open"))
            work.shed_relays += (target,)
            work.shed_pending = target
            work.shed_wait = 0
            ann.append(f"shed {target}: feeder {feeder:.2f} A over "
                       f"{limit:.2f} A")
        else:
            ann.append(f"shed exhausted: feeder {feeder:.2f} A over "
                       f"{limit:.2f} A")
    else:
        ann.append(f"shed complete: feeder {feeder:.2f} A within limit")
        work.shed_episode = False
        work.shed_relays = ()
        work.shed_pending = None
        work.shed_wait = 0
        work.violation_counters.pop("load_bus.current_rms", None)


def controller_step(frame: TelemetryFrame, state: ControllerState,
                    cfg: ControllerConfig
                    ) -> tuple[ControllerState, ControllerDecision]:
    """One supervisory period. Returns the successor state and decision."""
    work = state.copy()

    if (work.last_timestamp is not None
            and frame.timestamp <= work.last_timestamp):
        work.stale_frames += 1
        decision = ControllerDecision(
            excitation_duty=dict(work.last_excitation),
            armature_duty=dict(work.last_armature),
            annotations=(f"stale frame ignored: t={frame.timestamp:.6f}",))
        return work, decision
    work.last_timestamp = frame.timestamp

    ann: list[str] = []
    relay_cmds: list[tuple[str, str]] = []
    breaker_cmds: list[tuple[str, str]] = []
    sync_close: tuple[str, str] | None = None
    dt = cfg.control_period_s

    # operator and scenario requests, mediated before evaluation
    for cmd in work.pending_commands:
        _apply_command(work, cmd, frame, cfg, relay_cmds, breaker_cmds, ann)
    work.pending_commands = []

    # (1) limit check
    violations = check_limits(frame, cfg)
    beyond = set()
    feeder_beyond = any(v.quantity == "load_bus.current_rms"
                        and v.band == "beyond" for v in violations)
    for violation in violations:
        ann.append(violation.describe())
        if violation.band != "beyond":
            continue
        beyond.add(violation.quantity)
        # A feeder overload also lifts every stator current, so machine
        # trip confirmation is blocked (frozen, not reset) while the
        # feeder path owns the event; shedding acts first.
        machine_quantity = (violation.quantity.endswith(".current_rms")
                            and not violation.quantity.startswith("load_bus"))
        if machine_quantity and feeder_beyond:
            continue
        work.violation_counters[violation.quantity] = (
            work.violation_counters.get(violation.quantity, 0) + 1)
    for quantity in [q for q in work.violation_counters if q not in beyond]:
        del work.violation_counters[quantity]

    # (2) fault confirmation and isolation
    for gid in GEN_IDS:
        counter = work.violation_counters.get(f"{gid}.current_rms", 0)
        if (counter >= cfg.trip_confirm_periods
                and work.modes[gid] != GenMode.TRIPPED):
            value = frame.generators[gid].current_rms
            _trip(work, gid, f"overcurrent {value:.2f} A confirmed",
                  breaker_cmds, ann)
    for gid in GEN_IDS:
        # latched trip holds the breaker open against outside interference
        if (work.modes[gid] == GenMode.TRIPPED
                and frame.generators[gid].breaker_closed
                and (breaker_id(gid), "open") not in breaker_cmds):
            breaker_cmds.append((breaker_id(gid), "open"))
    for quantity in ("load_bus.voltage_rms", "load_bus.frequency"):
        if (work.violation_counters.get(quantity, 0)
                >= cfg.trip_confirm_periods):
            ann.append(f"excursion persists: {quantity}")

    # (3) load shedding
    _shedding(work, frame, cfg, relay_cmds, ann)
    if work.shed_episode and work.shed_pending is None:
        candidates = [r for r in cfg.shedding_order
                      if r not in work.shed_relays
                      and frame.relays.get(r, False)]
        if not candidates and frame.load_bus.current_rms > cfg.branch_current_limit_a:
            feeding = [g for g in GEN_IDS
                       if work.modes[g] in _REGULATED
                       and frame.generators[g].breaker_closed]
            if len(feeding) == 1:
                _trip(work, feeding[0],
                      "feeder fault with shedding exhausted",
                      breaker_cmds, ann)

    # (4) regulation
    exc_duty: dict[str, float] = {}
    arm_duty: dict[str, float] = {}
    for gid in GEN_IDS:
        tele = frame.generators[gid]
        if work.modes[gid] in _REGULATED:
            v_set = work.voltage_setpoints[gid]
            rpm_set = work.speed_setpoints[gid]
            if work.modes[gid] == GenMode.SYNCHRONIZING:
                target = work.sync_targets.get(gid)
                if target is not None:
                    v_set, rpm_set = target
            duty, work.exc_integrators[gid] = pi_step(
                cfg.excitation_gains, v_set - tele.voltage_rms,
                work.exc_integrators[gid], dt)
            exc_duty[gid] = duty
            duty, work.spd_integrators[gid] = pi_step(
                cfg.speed_gains, rpm_set - tele.speed_rpm,
                work.spd_integrators[gid], dt)
            arm_duty[gid] = duty
        else:
            exc_duty[gid] = 0.0
            arm_duty[gid] = 0.0
    work.last_excitation = dict(exc_duty)
    work.last_armature = dict(arm_duty)

    # (5) synchronization supervision
    for gid in GEN_IDS:
        if work.modes[gid] != GenMode.SYNCHRONIZING:
            continue
        tele = frame.generators[gid]
        if tele.breaker_closed:
            work.modes[gid] = GenMode.RUNNING
            work.sync_counters.pop(gid, None)
            work.sync_targets.pop(gid, None)
            ann.append(f"sync aborted {gid}: breaker already closed")
            continue
        chk = sync_check(tele, frame.load_bus, cfg)
        if chk.permissive:
            work.sync_counters[gid] = work.sync_counters.get(gid, 0) + 1
        else:
            work.sync_counters[gid] = 0
        if cfg.sync_assist and not chk.dead_bus:
            # track the bus with a small closing slip; acts next period
            v_target = min(max(frame.load_bus.voltage_rms,
                               0.5 * cfg.voltage_setpoint),
                           1.5 * cfg.voltage_setpoint)
            rpm_target = ((frame.load_bus.frequency + cfg.sync_slip_hz)
                          * 60.0 / cfg.pole_pairs)
            rpm_target = min(max(rpm_target, 0.5 * cfg.speed_setpoint_rpm),
                             1.5 * cfg.speed_setpoint_rpm)
            work.sync_targets[gid] = (v_target, rpm_target)
        else:
            work.sync_targets.pop(gid, None)
        if (work.sync_counters[gid] >= cfg.sync_confirm_periods
                and sync_close is None):
            sync_close = (gid, LOAD_BUS)
            breaker_cmds.append((breaker_id(gid), "closed"))
            work.modes[gid] = GenMode.RUNNING
            work.sync_counters.pop(gid, None)
            work.sync_targets.pop(gid, None)
            suffix = " (dead bus)" if chk.dead_bus else ""
            ann.append(f"sync close {gid}: dv={chk.voltage_residual:.4f} "
                       f"df={chk.frequency_residual_hz:.3f} "
                       f"dph={chk.phase_residual_deg:.2f}{suffix}")

    fed = any(frame.generators[g].breaker_closed
              and work.modes[g] in _REGULATED for g in GEN_IDS)
    if not fed:
        work.system_mode = SystemMode.ISLAND
        ann.append("island: no generator feeding the bus")
    elif work.shed_episode:
        work.system_mode = SystemMode.SHEDDING
    elif violations:
        work.system_mode = SystemMode.ALERT
    else:
        work.system_mode = SystemMode.NORMAL

    decision = ControllerDecision(
        excitation_duty=exc_duty,
        armature_duty=arm_duty,
        relay_commands=tuple(relay_cmds),
        breaker_commands=tuple(breaker_cmds),
        sync_close=sync_close,
        annotations=tuple(ann),
    )
    return work, decision


def decision_line(timestamp: float, state: ControllerState,
                  decision: ControllerDecision) -> str:
    """One stable text record per period for the decision log."""
    modes = ",".join(f"{g}:{state.modes[g].value}" for g in GEN_IDS)
    exc = ",".join(f"{g}:{decision.excitation_duty[g]:.6f}"
                   for g in GEN_IDS)
    arm = ",".join(f"{g}:{decision.armature_duty[g]:.6f}"
                   for g in GEN_IDS)
    relay = ",".join(f"{i}:{a}" for i, a in decision.relay_commands) or "-"
    brk = ",".join(f"{i}:{a}" for i, a in decision.breaker_commands) or "-"
    sync = (f"{decision.sync_close[0]}:{decision.sync_close[1]}"
            if decision.sync_close else "-")
    ann = ";".join(decision.annotations) or "-"
    return (f"t={timestamp:.6f}|modes={modes}|sys={state.system_mode.value}"
            f"|exc={exc}|arm={arm}|relay={relay}|brk={brk}"
            f"|sync={sync}|ann={ann}")
