"""Placement of VNF forwarding graphs onto abstracted host graphs."""

from .model import (
    Host,
    HostGraph,
    Placement,
    Scenario,
    ScenarioError,
    ServiceSpec,
    Vnf,
    Vnffg,
    load_scenario,
    save_scenario,
    validate_scenario,
)

__all__ = [
    "Host",
    "HostGraph",
    "Placement",
    "Scenario",
    "ScenarioError",
    "ServiceSpec",
    "Vnf",
    "Vnffg",
    "load_scenario",
    "save_scenario",
    "validate_scenario",
]
