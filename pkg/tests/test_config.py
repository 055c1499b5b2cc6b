import dataclasses

import pytest

from gridloop.config import (
    ControllerConfig,
    LoadElement,
    MachineParams,
    PIGains,
    PlantConfig,
    breaker_id,
    merged,
    rad_to_rpm,
    rpm_to_rad,
)
from gridloop.errors import ConfigError


def test_default_plant_is_consistent():
    cfg = PlantConfig()
    assert set(cfg.machines) == {"gen1", "gen2"}
    assert cfg.shed_order() == ("L4", "L3", "L2", "L1")
    assert cfg.load_by_id("L3").impedance == 120.0 + 90.0j


def test_nominal_frequency_follows_pole_pairs():
    m = MachineParams()
    assert m.nominal_frequency_hz == pytest.approx(
        m.pole_pairs * m.rated_speed_rpm / 60.0)
    faster = dataclasses.replace(m, pole_pairs=3)
    assert faster.nominal_frequency_hz == pytest.approx(70.0)


def test_speed_conversions_round_trip():
    assert rad_to_rpm(rpm_to_rad(1400.0)) == pytest.approx(1400.0)
    assert rpm_to_rad(60.0 / (2.0 * 3.141592653589793)) == pytest.approx(1.0)


def test_breaker_id_shape():
    assert breaker_id("gen1") == "brk_gen1"


@pytest.mark.parametrize("field_name,value", [
    ("inertia", 0.0),
    ("synchronous_reactance", -1.0),
    ("exciter_time_constant", 0.0),
    ("torque_constant", -0.5),
])
def test_machine_rejects_nonpositive(field_name, value):
    with pytest.raises(ConfigError):
        dataclasses.replace(MachineParams(), **{field_name: value})


def test_machine_allows_zero_damping_and_stator_resistance():
    m = dataclasses.replace(MachineParams(), damping=0.0,
                            stator_resistance=0.0)
    assert m.damping == 0.0


def test_load_element_kind_constraints():
    with pytest.raises(ConfigError):
        LoadElement("bad", "resistive", 80.0 + 5.0j, priority=9)
    with pytest.raises(ConfigError):
        LoadElement("bad", "inductive", 80.0 + 0.0j, priority=9)
    with pytest.raises(ConfigError):
        LoadElement("bad", "capacitive", 80.0 - 5.0j, priority=9)


def test_load_relay_id_defaults_to_element_id():
    el = LoadElement("L9", "resistive", 50.0 + 0.0j, priority=9)
    assert el.relay_id == "L9"


def test_duplicate_load_priorities_rejected():
    loads = (
        LoadElement("A", "resistive", 50.0 + 0.0j, priority=1),
        LoadElement("B", "resistive", 60.0 + 0.0j, priority=1),
    )
    with pytest.raises(ConfigError):
        dataclasses.replace(PlantConfig(), loads=loads)


def test_line_impedance_quadrant_check():
    with pytest.raises(ConfigError):
        dataclasses.replace(PlantConfig(),
                            lines={"gen1": -0.5 + 1.0j, "gen2": 0.5 + 1.0j})


def test_pi_gains_clamp_ordering():
    with pytest.raises(ConfigError):
        PIGains(kp=1.0, ki=1.0, out_min=1.0, out_max=1.0)


def test_controller_band_factor_lower_bound():
    with pytest.raises(ConfigError):
        dataclasses.replace(ControllerConfig(), permissible_band_factor=0.9)


def test_controller_beyond_band_current():
    cfg = ControllerConfig()
    assert cfg.beyond_band_current_a == pytest.approx(16.0 * 1.1)


class TestMerged:
    def test_scalar_override(self):
        cfg = merged(PlantConfig(), {"nominal_voltage": 230.0})
        assert cfg.nominal_voltage == 230.0

    def test_nested_dataclass_override(self):
        cfg = merged(PlantConfig(), {"rails": {"armature_voltage": 240.0}})
        assert cfg.rails.armature_voltage == 240.0
        assert cfg.rails.excitation_voltage == 220.0

    def test_machine_table_override(self):
        cfg = merged(PlantConfig(),
                     {"machines": {"gen2": {"inertia": 0.08}}})
        assert cfg.machines["gen2"].inertia == 0.08
        assert cfg.machines["gen1"].inertia == 0.05

    def test_impedance_pair_coercion(self):
        cfg = merged(PlantConfig(), {"lines": {"gen1": [0.4, 0.8]}})
        assert cfg.lines["gen1"] == 0.4 + 0.8j

    def test_loads_replacement(self):
        cfg = merged(PlantConfig(), {"loads": [
            {"id": "only", "kind": "resistive", "impedance": 40.0,
             "priority": 1},
        ]})
        assert len(cfg.loads) == 1
        assert cfg.loads[0].impedance == 40.0 + 0.0j

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            merged(PlantConfig(), {"not_a_field": 1})

    def test_unknown_machine_rejected(self):
        with pytest.raises(ConfigError):
            merged(PlantConfig(), {"machines": {"gen9": {"inertia": 1.0}}})

    def test_invalid_merged_value_still_validates(self):
        with pytest.raises(ConfigError):
            merged(PlantConfig(),
                   {"machines": {"gen1": {"inertia": -1.0}}})

    def test_empty_override_returns_same_object(self):
        cfg = PlantConfig()
        assert merged(cfg, {}) is cfg
