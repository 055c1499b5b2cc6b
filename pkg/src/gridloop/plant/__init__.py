"""Continuous plant models: converters, machines, and the AC network."""

from .converter import BuckConverter, buck_output
from .machines import (
    GeneratorState,
    PrimeMoverState,
    electrical_torque,
    step_generator,
    step_prime_mover,
)
from .network import NetworkState, NetworkSolution, solve_network
from .system import PlantInputs, PlantModel, SetState, Topology

__all__ = [
    "BuckConverter",
    "buck_output",
    "GeneratorState",
    "PrimeMoverState",
    "electrical_torque",
    "step_generator",
    "step_prime_mover",
    "NetworkState",
    "NetworkSolution",
    "solve_network",
    "PlantInputs",
    "PlantModel",
    "SetState",
    "Topology",
]
