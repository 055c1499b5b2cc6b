"""Configuration dataclasses for the two-generator, three-bus bench plant.

Quantities are SI unless a field name carries a unit suffix. The defaults
describe a pair of identical desk-scale motor-generator sets (1.2 kW
alternators spun at 1400 RPM by separately excited 1 kW DC motors), a shared
load bank behind 16 A switches, and the bench supply rails. Values that are
not nameplate data are engineering choices sized so the rated operating
point is a feasible equilibrium; they are documented on each field.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .errors import ConfigError

GEN_IDS = ("gen1", "gen2")
LOAD_BUS = "load_bus"

TWO_PI = 2.0 * math.pi


def breaker_id(gen_id: str) -> str:
    return f"brk_{gen_id}"


def rpm_to_rad(rpm: float) -> float:
    return rpm * TWO_PI / 60.0


def rad_to_rpm(omega: float) -> float:
    return omega * 60.0 / TWO_PI


@dataclass(frozen=True)
class MachineParams:
    """One motor-generator set: a DC prime mover on a common shaft with a
    synchronous alternator.

    Attributes:
        gen_rating_w: Alternator nameplate rating.
        rated_speed_rpm: Shaft speed at which the set is meant to run.
        pole_pairs: Alternator pole pairs. With the 1400 RPM shaft this
            puts nominal electrical frequency at pole_pairs * rpm / 60.
        inertia: Combined shaft inertia, kg*m^2.
        damping: Viscous damping on the combined shaft, N*m*s/rad.
        synchronous_reactance: Alternator reactance behind the internal
            EMF, ohms.
        stator_resistance: Alternator winding resistance, ohms. Zero by
            default so delivered power and air-gap power coincide.
        exciter_time_constant: First-order lag from applied field voltage
            to internal EMF magnitude, seconds.
        emf_gain: Internal EMF volts per field volt at rated speed. Sized
            so mid-range exciter duty holds the terminal at nominal
            voltage under rated load.
        gen_field_resistance: Alternator field winding resistance, ohms,
            used only to report field current on the DC telemetry rail.
        motor_rating_w: Prime mover nameplate rating.
        motor_rated_voltage: Prime mover rated armature voltage.
        motor_rated_field_a: Prime mover rated field current.
        armature_resistance: Armature circuit resistance, ohms.
        armature_inductance: Armature inductance, henries. With the
            default resistance this gives a 50 ms electrical time
            constant.
        motor_field_resistance: Motor field winding resistance, ohms
            (rated field current at the 220 V field supply).
        torque_constant: Back-EMF / torque constant at rated field,
            V*s/rad, derived from the armature rated point (220 V, 1 kW,
            1400 RPM, armature drop subtracted).
    """

    gen_rating_w: float = 1200.0
    rated_speed_rpm: float = 1400.0
    pole_pairs: int = 2
    inertia: float = 0.05
    damping: float = 0.01
    synchronous_reactance: float = 20.0
    stator_resistance: float = 0.0
    exciter_time_constant: float = 0.5
    emf_gain: float = 2.2
    gen_field_resistance: float = 200.0
    motor_rating_w: float = 1000.0
    motor_rated_voltage: float = 220.0
    motor_rated_field_a: float = 0.55
    armature_resistance: float = 1.0
    armature_inductance: float = 0.05
    motor_field_resistance: float = 400.0
    torque_constant: float = 1.4696

    def __post_init__(self) -> None:
        positive = (
            "gen_rating_w", "rated_speed_rpm", "inertia",
            "synchronous_reactance", "exciter_time_constant", "emf_gain",
            "gen_field_resistance", "motor_rating_w", "motor_rated_voltage",
            "motor_rated_field_a", "armature_resistance",
            "armature_inductance", "motor_field_resistance",
            "torque_constant",
        )
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.damping < 0.0 or self.stator_resistance < 0.0:
            raise ConfigError("damping and stator_resistance must be >= 0")
        if self.pole_pairs < 1:
            raise ConfigError("pole_pairs must be >= 1")

    @property
    def rated_speed(self) -> float:
        """Rated shaft speed in rad/s."""
        return rpm_to_rad(self.rated_speed_rpm)

    @property
    def nominal_frequency_hz(self) -> float:
        """Electrical frequency at rated shaft speed."""
        return self.pole_pairs * self.rated_speed_rpm / 60.0

    @property
    def rated_current_a(self) -> float:
        """Alternator current at rating and rated motor voltage."""
        return self.gen_rating_w / self.motor_rated_voltage


@dataclass(frozen=True)
class SupplyRails:
    """Bench DC supplies feeding the converters and the motor fields.

    The supply cabinet carries a 220 V and a 230 V rail rated 10 A and
    3.5 A in some order; the nameplate does not say which pairing is
    which. These defaults put 220 V / 10 A on the excitation side and
    230 V / 3.5 A on the armature side. Current ratings are recorded for
    reference and are not enforced by the models.
    """

    excitation_voltage: float = 220.0
    excitation_current_a: float = 10.0
    armature_voltage: float = 230.0
    armature_current_a: float = 3.5
    motor_field_voltage: float = 220.0

    def __post_init__(self) -> None:
        for name in ("excitation_voltage", "armature_voltage",
                     "motor_field_voltage"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class SensorParams:
    """ADC front end for the DC telemetry channels.

    reference_voltage mirrors the 3.3 V controller board supply;
    noise_sigma is the additive Gaussian noise level as a fraction of
    full scale.
    """

    reference_voltage: float = 3.3
    adc_bits: int = 10
    noise_sigma: float = 0.002
    dc_voltage_full_scale: float = 250.0
    dc_current_full_scale: float = 2.0

    def __post_init__(self) -> None:
        if not 1 <= self.adc_bits <= 24:
            raise ConfigError("adc_bits must be in [1, 24]")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.dc_voltage_full_scale <= 0 or self.dc_current_full_scale <= 0:
            raise ConfigError("sensor full scales must be positive")


@dataclass(frozen=True)
class TorqueMeterParams:
    """Shaft torque/power meter ranges; readings clip to these."""

    speed_range_rpm: float = 3000.0
    torque_range: float = 17.5
    power_range_w: float = 5500.0

    def __post_init__(self) -> None:
        if min(self.speed_range_rpm, self.torque_range,
               self.power_range_w) <= 0:
            raise ConfigError("torque meter ranges must be positive")


@dataclass(frozen=True)
class LoadElement:
    """One switched element of the shared load bank.

    priority orders shedding: priority 1 is dropped first. relay_id
    defaults to the element id.
    """

    id: str
    kind: str
    impedance: complex
    priority: int
    relay_id: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("resistive", "inductive"):
            raise ConfigError(f"load {self.id}: unknown kind {self.kind!r}")
        if self.impedance.real <= 0.0:
            raise ConfigError(
                f"load {self.id}: impedance real part must be positive")
        if self.kind == "resistive" and self.impedance.imag != 0.0:
            raise ConfigError(
                f"load {self.id}: resistive element must have zero reactance")
        if self.kind == "inductive" and self.impedance.imag <= 0.0:
            raise ConfigError(
                f"load {self.id}: inductive element needs positive reactance")
        if not self.relay_id:
            object.__setattr__(self, "relay_id", self.id)


def default_machines() -> dict[str, MachineParams]:
    return {gid: MachineParams() for gid in GEN_IDS}


def default_lines() -> dict[str, complex]:
    # Feeder impedance from each generator bus to the load bus.
    return {gid: 0.5 + 1.0j for gid in GEN_IDS}


def default_load_bank() -> tuple[LoadElement, ...]:
    # L1/L2 are the base load (about 1 kW at 220 V), L3 a lagging branch,
    # L4 a heavy bank used for overload studies. Lowest priority sheds
    # first.
    return (
        LoadElement("L1", "resistive", 80.0 + 0.0j, priority=4),
        LoadElement("L2", "resistive", 120.0 + 0.0j, priority=3),
        LoadElement("L3", "inductive", 120.0 + 90.0j, priority=2),
        LoadElement("L4", "resistive", 8.0 + 0.0j, priority=1),
    )


@dataclass(frozen=True)
class PlantConfig:
    """Everything the plant models need: machines, network, devices."""

    machines: dict[str, MachineParams] = field(default_factory=default_machines)
    lines: dict[str, complex] = field(default_factory=default_lines)
    loads: tuple[LoadElement, ...] = field(default_factory=default_load_bank)
    rails: SupplyRails = field(default_factory=SupplyRails)
    sensor: SensorParams = field(default_factory=SensorParams)
    torque_meter: TorqueMeterParams = field(default_factory=TorqueMeterParams)
    nominal_voltage: float = 220.0
    relay_delay_s: float = 0.010
    load_switch_rating_a: float = 16.0
    integration_dt_s: float = 1.0e-4

    def __post_init__(self) -> None:
        if set(self.machines) != set(GEN_IDS):
            raise ConfigError(f"machines must be keyed by {GEN_IDS}")
        if set(self.lines) != set(GEN_IDS):
            raise ConfigError(f"lines must be keyed by {GEN_IDS}")
        for gid, z in self.lines.items():
            if z == 0:
                raise ConfigError(f"line {gid}: impedance must be nonzero")
            if z.real < 0.0 or z.imag < 0.0:
                raise ConfigError(f"line {gid}: impedance must sit in the "
                                  "first quadrant")
        ids = [el.id for el in self.loads]
        if len(set(ids)) != len(ids):
            raise ConfigError("load element ids must be unique")
        prios = [el.priority for el in self.loads]
        if len(set(prios)) != len(prios):
            raise ConfigError("load priorities must be unique integers")
        if self.nominal_voltage <= 0.0:
            raise ConfigError("nominal_voltage must be positive")
        if self.relay_delay_s < 0.0:
            raise ConfigError("relay_delay_s must be >= 0")
        if self.load_switch_rating_a <= 0.0:
            raise ConfigError("load_switch_rating_a must be positive")
        if self.integration_dt_s <= 0.0:
            raise ConfigError("integration_dt_s must be positive")

    def load_by_id(self, element_id: str) -> LoadElement:
        for el in self.loads:
            if el.id == element_id:
                return el
        raise KeyError(element_id)

    def shed_order(self) -> tuple[str, ...]:
        """Load element ids in ascending priority (shed-first first)."""
        return tuple(el.id for el in
                     sorted(self.loads, key=lambda el: el.priority))

    @property
    def rated_current_a(self) -> float:
        """Per-generator rated current at nominal voltage."""
        rating = max(m.gen_rating_w for m in self.machines.values())
        return rating / self.nominal_voltage


@dataclass(frozen=True)
class PIGains:
    """Proportional-integral regulator gains with output clamp and bias."""

    kp: float
    ki: float
    bias: float = 0.0
    out_min: float = 0.0
    out_max: float = 1.0

    def __post_init__(self) -> None:
        if self.out_min >= self.out_max:
            raise ConfigError("PI clamp must satisfy out_min < out_max")


@dataclass(frozen=True)
class ControllerConfig:
    """Supervisory controller setpoints, bands, and regulator gains.

    Bands: a measurement between a limit and permissible_band_factor
    times that limit counts as a correctable excursion; beyond the factor
    it counts toward trip or shed confirmation. Confirmation windows are
    in controller periods.
    """

    control_period_s: float = 1.0e-3
    voltage_setpoint: float = 220.0
    voltage_band: float = 11.0
    speed_setpoint_rpm: float = 1400.0
    pole_pairs: int = 2
    frequency_band_hz: float = 0.5
    branch_current_limit_a: float = 16.0
    gen_current_limit_a: float = 8.0
    permissible_band_factor: float = 1.1
    trip_confirm_periods: int = 50
    shed_holdoff_periods: int = 20
    sync_voltage_tol: float = 0.05
    sync_frequency_tol_hz: float = 0.2
    sync_phase_tol_deg: float = 10.0
    sync_confirm_periods: int = 20
    sync_slip_hz: float = 0.1
    sync_assist: bool = True
    dead_bus_close: bool = False
    dead_bus_voltage_frac: float = 0.1
    excitation_gains: PIGains = field(
        default_factory=lambda: PIGains(kp=0.008, ki=0.04, bias=0.45))
    speed_gains: PIGains = field(
        default_factory=lambda: PIGains(kp=3.0e-4, ki=3.0e-3, bias=0.93))
    shedding_order: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.control_period_s <= 0:
            raise ConfigError("control_period_s must be positive")
        if self.voltage_setpoint <= 0 or self.voltage_band <= 0:
            raise ConfigError("voltage setpoint and band must be positive")
        if self.speed_setpoint_rpm <= 0:
            raise ConfigError("speed_setpoint_rpm must be positive")
        if self.pole_pairs < 1:
            raise ConfigError("pole_pairs must be >= 1")
        if self.branch_current_limit_a <= 0 or self.gen_current_limit_a <= 0:
            raise ConfigError("current limits must be positive")
        if self.permissible_band_factor < 1.0:
            raise ConfigError("permissible_band_factor must be >= 1")
        for name in ("trip_confirm_periods", "shed_holdoff_periods",
                     "sync_confirm_periods"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0 < self.sync_voltage_tol < 1):
            raise ConfigError("sync_voltage_tol must be in (0, 1)")
        if self.sync_frequency_tol_hz <= 0 or self.sync_phase_tol_deg <= 0:
            raise ConfigError("sync tolerances must be positive")
        if not (0 < self.dead_bus_voltage_frac < 1):
            raise ConfigError("dead_bus_voltage_frac must be in (0, 1)")

    @property
    def nominal_frequency_hz(self) -> float:
        return self.pole_pairs * self.speed_setpoint_rpm / 60.0

    @property
    def beyond_band_current_a(self) -> float:
        return self.branch_current_limit_a * self.permissible_band_factor


def _coerce_complex(value: object) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"cannot read {value!r} as an impedance; "
                      "use a number or a [resistance, reactance] pair")


def _load_elements_from(data: object) -> tuple[LoadElement, ...]:
    if not isinstance(data, (list, tuple)):
        raise ConfigError("loads must be a list of element tables")
    out = []
    for entry in data:
        if not isinstance(entry, dict):
            raise ConfigError("each load entry must be a table")
        try:
            out.append(LoadElement(
                id=str(entry["id"]),
                kind=str(entry["kind"]),
                impedance=_coerce_complex(entry["impedance"]),
                priority=int(entry["priority"]),
                relay_id=str(entry.get("relay_id", "")),
            ))
        except KeyError as exc:
            raise ConfigError(f"load entry missing field {exc}") from exc
    return tuple(out)


def merged(obj, overrides: dict):
    """Copy a frozen config dataclass with nested dict overrides applied.

    Used when a scenario document overrides plant or controller defaults.
    Unknown keys raise ConfigError so typos fail validation instead of
    being silently dropped.
    """
    if not overrides:
        return obj
    kwargs = {}
    for key, value in overrides.items():
        if not any(f.name == key for f in dataclasses.fields(obj)):
            raise ConfigError(
                f"{type(obj).__name__} has no field {key!r}")
        current = getattr(obj, key)
        if key == "loads":
            kwargs[key] = _load_elements_from(value)
        elif dataclasses.is_dataclass(current) and isinstance(value, dict):
            kwargs[key] = merged(current, value)
        elif isinstance(current, complex):
            kwargs[key] = _coerce_complex(value)
        elif isinstance(current, dict) and isinstance(value, dict):
            updated = dict(current)
            for sub, subval in value.items():
                if sub not in updated:
                    raise ConfigError(f"{key} has no entry {sub!r}")
                if dataclasses.is_dataclass(updated[sub]):
                    updated[sub] = merged(updated[sub], subval)
                elif isinstance(updated[sub], complex):
                    updated[sub] = _coerce_complex(subval)
                else:
                    updated[sub] = subval
            kwargs[key] = updated
        elif isinstance(current, tuple) and isinstance(value, (list, tuple)):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return dataclasses.replace(obj, **kwargs)
