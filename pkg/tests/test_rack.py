"""Device rack: the sampled telemetry path end to end."""

import cmath
import dataclasses
import math
import random

import pytest

from gridloop.config import GEN_IDS, PlantConfig
from gridloop.devices.rack import BIAS_CHANNELS, DeviceRack
from gridloop.errors import ConfigError
from gridloop.plant.machines import GeneratorState, PrimeMoverState
from gridloop.plant.network import NetworkSolution
from gridloop.plant.system import PlantSnapshot

PERIOD = 1.0e-3
DT = 1.0e-4


def quiet_cfg():
    """Defaults with ADC noise turned off so codes are exact."""
    cfg = PlantConfig()
    return dataclasses.replace(
        cfg, sensor=dataclasses.replace(cfg.sensor, noise_sigma=0.0))


def make_rack(cfg=None):
    cfg = cfg or quiet_cfg()
    rack = DeviceRack(cfg, PERIOD, lambda label: random.Random(label))
    rack.set_initial_topology(set(GEN_IDS), {"L1", "L2"})
    return rack


def snapshot_for(*, terminal=None, stator=None, bus_v=219.0 + 0j,
                 feeder=4.6 + 0j, torque=3.5, speed=146.6,
                 field_v=100.0, power=None):
    terminal = terminal or {g: 220.0 + 0j for g in GEN_IDS}
    stator = stator or {g: 2.3 + 0j for g in GEN_IDS}
    movers = {}
    gens = {}
    for gid in GEN_IDS:
        movers[gid] = PrimeMoverState(
            armature_voltage=210.0, armature_current=3.0,
            field_current=0.55, shaft_torque=torque, shaft_speed=speed)
        gens[gid] = GeneratorState(
            rotor_angle=0.0, rotor_speed=speed, field_voltage=field_v,
            internal_emf=260.0, terminal_voltage=terminal[gid],
            stator_current=stator[gid])
    solution = NetworkSolution(
        bus_voltages={"bus_gen1": terminal["gen1"],
                      "bus_gen2": terminal["gen2"], "load_bus": bus_v},
        terminal_voltages=dict(terminal),
        stator_currents=dict(stator),
        line_currents=dict(stator),
        load_currents={"L1": feeder, "L2": 0j, "L3": 0j, "L4": 0j},
        feeder_current=feeder,
        airgap_power=power or {g: 500.0 for g in GEN_IDS},
        kcl_residual=0.0,
        energized=abs(bus_v) > 0,
    )
    return PlantSnapshot(prime_movers=movers, generators=gens,
                         solution=solution)


def test_sampled_values_show_register_quantization():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(
        terminal={g: 219.93 + 0j for g in GEN_IDS},
        stator={g: 2.345 + 0j for g in GEN_IDS}))
    gen = frame.generators["gen1"]
    # 0.1 V and 0.01 A register steps
    assert gen.voltage_rms == pytest.approx(219.9)
    assert gen.current_rms == pytest.approx(2.35, abs=1.0e-9)
    assert frame.load_bus.voltage_rms == pytest.approx(219.0)


def test_power_registers_are_whole_watts():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(
        terminal={g: 220.0 + 0j for g in GEN_IDS},
        stator={g: 2.3 - 0.4j for g in GEN_IDS}))
    gen = frame.generators["gen1"]
    assert gen.real_power == round(220.0 * 2.3)
    assert gen.reactive_power == round(220.0 * 0.4)
    assert gen.real_power == int(gen.real_power)


def test_negative_power_saturates_at_register_floor():
    # P and Q registers are unsigned; a reversed flow reads zero
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(
        stator={g: -2.3 + 0.4j for g in GEN_IDS}))
    gen = frame.generators["gen1"]
    assert gen.real_power == 0.0
    assert gen.reactive_power == 0.0


def test_huge_voltage_saturates_at_register_ceiling():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(
        terminal={g: 9000.0 + 0j for g in GEN_IDS}))
    assert frame.generators["gen1"].voltage_rms == pytest.approx(6553.5)


def test_torque_meter_clip_shows_in_telemetry():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(torque=25.0))
    assert frame.generators["gen1"].torque == pytest.approx(17.5)


def test_phase_is_relative_to_load_bus():
    rack = make_rack()
    shift = cmath.exp(1j * math.radians(10.0))
    frame = rack.sample(0.0, snapshot_for(
        terminal={"gen1": 220.0 * shift, "gen2": 220.0 + 0j}))
    assert frame.generators["gen1"].phase_deg == pytest.approx(10.0)
    assert frame.generators["gen2"].phase_deg == pytest.approx(0.0)


def test_phase_wraps_into_half_turn():
    rack = make_rack()
    shift = cmath.exp(1j * math.radians(190.0))
    frame = rack.sample(0.0, snapshot_for(
        terminal={"gen1": 220.0 * shift, "gen2": 220.0 + 0j}))
    assert frame.generators["gen1"].phase_deg == pytest.approx(-170.0)


def test_dead_bus_reads_zero_phase_and_frequency():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(bus_v=0j, feeder=0j))
    assert frame.load_bus.frequency == 0.0
    assert frame.load_bus.voltage_rms == 0.0
    for gid in GEN_IDS:
        assert frame.generators[gid].phase_deg == 0.0


def test_first_live_sample_reports_nominal_frequency():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for())
    nominal = PlantConfig().machines["gen1"].nominal_frequency_hz
    assert frame.load_bus.frequency == pytest.approx(nominal, abs=0.01)


def test_frequency_tracks_bus_angle_rate():
    rack = make_rack()
    nominal = PlantConfig().machines["gen1"].nominal_frequency_hz
    slip_hz = 0.5
    rack.sample(0.0, snapshot_for())
    angle = 2.0 * math.pi * slip_hz * PERIOD
    frame = rack.sample(PERIOD, snapshot_for(
        bus_v=219.0 * cmath.exp(1j * angle)))
    assert frame.load_bus.frequency == pytest.approx(nominal + slip_hz,
                                                     abs=0.02)


def test_frequency_history_resets_after_dead_bus():
    rack = make_rack()
    rack.sample(0.0, snapshot_for())
    rack.sample(PERIOD, snapshot_for(bus_v=0j, feeder=0j))
    frame = rack.sample(2 * PERIOD, snapshot_for(
        bus_v=219.0 * cmath.exp(1j * 1.0)))
    nominal = PlantConfig().machines["gen1"].nominal_frequency_hz
    # re-energized bus restarts the angle history at nominal
    assert frame.load_bus.frequency == pytest.approx(nominal, abs=0.01)


def test_field_channels_come_from_adc():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for(field_v=100.0))
    gen = frame.generators["gen1"]
    cfg = quiet_cfg()
    lsb_v = cfg.sensor.dc_voltage_full_scale / 1023
    lsb_i = cfg.sensor.dc_current_full_scale / 1023
    assert gen.field_voltage == pytest.approx(100.0, abs=0.5 * lsb_v + 1e-9)
    want_i = 100.0 / cfg.machines["gen1"].gen_field_resistance
    assert gen.field_current == pytest.approx(want_i, abs=0.5 * lsb_i + 1e-9)


def test_adc_noise_is_stream_deterministic():
    cfg = PlantConfig()
    assert cfg.sensor.noise_sigma > 0.0
    rack_a = DeviceRack(cfg, PERIOD, lambda label: random.Random(label))
    rack_b = DeviceRack(cfg, PERIOD, lambda label: random.Random(label))
    for rack in (rack_a, rack_b):
        rack.set_initial_topology(set(GEN_IDS), {"L1"})
    frame_a = rack_a.sample(0.0, snapshot_for())
    frame_b = rack_b.sample(0.0, snapshot_for())
    assert frame_a.generators["gen1"].field_voltage == \
        frame_b.generators["gen1"].field_voltage


def test_bias_shifts_reading_before_quantization():
    rack = make_rack()
    rack.set_bias("gen1.voltage_rms", 5.0)
    frame = rack.sample(0.0, snapshot_for())
    assert frame.generators["gen1"].voltage_rms == pytest.approx(225.0)
    assert frame.generators["gen2"].voltage_rms == pytest.approx(220.0)


def test_bias_on_unknown_channel_rejected():
    rack = make_rack()
    with pytest.raises(ConfigError):
        rack.set_bias("gen1.rotor_flux", 1.0)
    assert "gen1.voltage_rms" in BIAS_CHANNELS
    assert "load_bus.frequency" in BIAS_CHANNELS


def test_every_sample_consumes_three_meter_frames():
    rack = make_rack()
    rack.sample(0.0, snapshot_for())
    rack.sample(PERIOD, snapshot_for())
    assert rack.decoder.frames_decoded == 6
    assert rack.decoder.rejected == {}
    assert rack.decoder.sequence_gaps == 0


def test_topology_reflects_device_states():
    rack = make_rack()
    topo = rack.topology()
    assert topo.closed_breakers == frozenset(GEN_IDS)
    assert topo.closed_relays == frozenset({"L1", "L2"})


def test_commanded_relay_lands_after_delay():
    rack = make_rack()
    rack.command("L3", True, DT)
    for _ in range(99):
        rack.step_relays()
    assert "L3" not in rack.topology().closed_relays
    rack.step_relays()
    assert "L3" in rack.topology().closed_relays


def test_force_is_immediate():
    rack = make_rack()
    rack.force("brk_gen1", False)
    assert rack.topology().closed_breakers == frozenset({"gen2"})
    frame = rack.sample(0.0, snapshot_for())
    assert frame.generators["gen1"].breaker_closed is False
    assert frame.generators["gen2"].breaker_closed is True


def test_relay_states_reported_in_frame():
    rack = make_rack()
    frame = rack.sample(0.0, snapshot_for())
    assert frame.relays == {"L1": True, "L2": True,
                            "L3": False, "L4": False}
