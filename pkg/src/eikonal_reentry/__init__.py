"""Anisotropic fast marching on triangle meshes, extended with restitution-driven
re-excitability to simulate re-entrant activation."""

__version__ = "0.1.0"

from .compare import ComparisonReport, compare_fields
from .engine import (
    BlockLine,
    EngineConfig,
    EventLog,
    Snapshot,
    SnapshotSeries,
    StimulusEvent,
    init_engine,
    run,
    step,
)
from .fmm import ActivationField, dijkstra_solve, fmm_solve
from .mesh import Mesh, build_adjacency, load_mesh, save_mesh
from .metric import MetricField, acuteness_audit
from .restitution import RestitutionTable, load_table, save_table
from .scenario import Scenario, ScenarioError, parse_scenario

__all__ = [
    "ActivationField", "BlockLine", "ComparisonReport", "EngineConfig", "EventLog", "Mesh",
    "MetricField", "RestitutionTable", "Scenario", "ScenarioError", "Snapshot", "SnapshotSeries",
    "StimulusEvent", "acuteness_audit", "build_adjacency", "compare_fields", "dijkstra_solve",
    "fmm_solve", "init_engine", "load_mesh", "load_table", "parse_scenario", "run", "save_mesh",
    "save_table", "step",
]
