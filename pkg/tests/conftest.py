import dataclasses

import pytest

from gridloop.config import ControllerConfig, PlantConfig
from gridloop.devices.telemetry import (
    GeneratorTelemetry,
    LoadBusTelemetry,
    TelemetryFrame,
)


@pytest.fixture
def plant_cfg() -> PlantConfig:
    return PlantConfig()


@pytest.fixture
def ctrl_cfg(plant_cfg) -> ControllerConfig:
    # scenario parsing resolves the shed order from the load bank; tests
    # that call the supervisor directly need the same resolution
    return dataclasses.replace(ControllerConfig(),
                               shedding_order=plant_cfg.shed_order())


def gen_telemetry(**overrides) -> GeneratorTelemetry:
    """A healthy paralleled machine unless told otherwise."""
    values = dict(
        voltage_rms=220.0,
        current_rms=2.3,
        real_power=500.0,
        reactive_power=60.0,
        speed_rpm=1400.0,
        torque=3.5,
        phase_deg=0.0,
        field_voltage=100.0,
        field_current=0.5,
        breaker_closed=True,
    )
    values.update(overrides)
    return GeneratorTelemetry(**values)


def make_frame(t: float = 0.0, *, gen1=None, gen2=None, bus=None,
               relays=None) -> TelemetryFrame:
    """Synthetic telemetry with both machines healthy by default."""
    return TelemetryFrame(
        timestamp=t,
        generators={"gen1": gen1 or gen_telemetry(),
                    "gen2": gen2 or gen_telemetry()},
        load_bus=bus or LoadBusTelemetry(voltage_rms=219.0, current_rms=4.6,
                                         frequency=46.667),
        relays=relays if relays is not None
        else {"L1": True, "L2": True, "L3": False, "L4": False},
    )


def base_doc(**overrides) -> dict:
    """Minimal valid scenario document; overrides merge shallowly."""
    doc = {
        "schema_version": 1,
        "name": "test",
        "seed": 11,
        "duration": 0.05,
        "initial": {"relays": ["L1", "L2"]},
    }
    doc.update(overrides)
    return doc


def frames_per(doc: dict) -> int:
    return round(doc["duration"] / 1.0e-3)
