"""
Services package: experiment documents, runs, sweeps and curated demos.
"""

from .demos import DEMOS, DemoResult, demo_names, run_demo
from .experiment import (
    SCHEMA_TAG,
    AlgorithmSpec,
    EnsembleSpec,
    Experiment,
    ExperimentConfig,
    InitSpec,
    NoiseSpec,
    OutputSpec,
    StepSpec,
    SweepConfig,
    SweepGrid,
    TopologySpec,
    build_experiment,
    experiment_schema,
    load_experiment,
    load_sweep,
    load_topology,
    parse_experiment,
    parse_sweep,
    read_document,
)
from .runner import ComparisonReport, ExperimentRunner, RunOutcome, SeriesCheck, check_dominance
from .sweep import SWEEP_COLUMNS, SweepResult, SweepRunner

__all__ = [
    "DEMOS",
    "SCHEMA_TAG",
    "SWEEP_COLUMNS",
    "AlgorithmSpec",
    "ComparisonReport",
    "DemoResult",
    "EnsembleSpec",
    "Experiment",
    "ExperimentConfig",
    "ExperimentRunner",
    "InitSpec",
    "NoiseSpec",
    "OutputSpec",
    "RunOutcome",
    "SeriesCheck",
    "StepSpec",
    "SweepConfig",
    "SweepGrid",
    "SweepResult",
    "SweepRunner",
    "TopologySpec",
    "build_experiment",
    "check_dominance",
    "demo_names",
    "experiment_schema",
    "load_experiment",
    "load_sweep",
    "load_topology",
    "parse_experiment",
    "parse_sweep",
    "read_document",
    "run_demo",
]
