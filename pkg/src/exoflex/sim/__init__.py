"""Closed-loop simulator: scripted human, cuff coupling, exoskeleton plant, metrics."""

from .human import HoldIntent, JointIntent, PlanarReachIntent, TargetIntent, human_chain
from .interface import BindingInterface, SensorReading, binding_wrench, measure
from .library import MOVEMENTS, COMPOUND_PARTS, SPEED_GRID, hold, sagittal_reach, square_track, sweep_movement
from .metrics import Metrics, compute_metrics, sign_changes
from .plant import Coupling, Plant, PlantParams, PlantState, mechanical_energy, plant_step
from .scenario import ScenarioConfig, ScenarioRunner, Trace, run_scenario

__all__ = [
    "BindingInterface",
    "COMPOUND_PARTS",
    "Coupling",
    "HoldIntent",
    "JointIntent",
    "MOVEMENTS",
    "Metrics",
    "Plant",
    "PlantParams",
    "PlantState",
    "PlanarReachIntent",
    "SPEED_GRID",
    "ScenarioConfig",
    "ScenarioRunner",
    "SensorReading",
    "TargetIntent",
    "Trace",
    "binding_wrench",
    "compute_metrics",
    "hold",
    "human_chain",
    "measure",
    "mechanical_energy",
    "plant_step",
    "run_scenario",
    "sagittal_reach",
    "sign_changes",
    "square_track",
    "sweep_movement",
]
