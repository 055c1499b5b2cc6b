"""Fixed-step orchestration: scenarios, the period loop, and export."""

from .export import export_record
from .scenario import Event, Scenario, parse_scenario, validate_scenario
from .simulation import EnergyLedger, Simulation, SimulationRecord
from .streams import stream_factory

__all__ = [
    "Event",
    "Scenario",
    "parse_scenario",
    "validate_scenario",
    "EnergyLedger",
    "Simulation",
    "SimulationRecord",
    "export_record",
    "stream_factory",
]
