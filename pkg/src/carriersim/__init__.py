"""Simulator for an autonomous drone-carrier vessel.

A small unmanned surface vessel locates a target ship without satellite
positioning (shore gimbal camera, onboard gimbal camera, LiDAR), docks
alongside it, and works its deck with a team of quadrotors and a
manipulator arm. The package provides the physics, the sensor models,
the estimators, the guidance laws, and a deterministic mission loop
that ties them together, plus scenario files and a CLI.
"""

from .scenario import (
    Scenario,
    ScenarioError,
    builtin_scenario,
    builtin_scenario_names,
    load_scenario_file,
    resolve_scenario,
)
from .simulation import (
    DT_S,
    RunReport,
    SimTuning,
    SimWorld,
    aggregate_reports,
    run_batch,
    run_scenario,
    simulate_landing_descents,
)

__version__ = "0.1.0"

__all__ = [
    "DT_S",
    "RunReport",
    "Scenario",
    "ScenarioError",
    "SimTuning",
    "SimWorld",
    "aggregate_reports",
    "builtin_scenario",
    "builtin_scenario_names",
    "load_scenario_file",
    "resolve_scenario",
    "run_batch",
    "run_scenario",
    "simulate_landing_descents",
    "__version__",
]
