"""
Dynamics package: update maps, runs, fixed points and noise injection.
"""

from .config import (
    AlgorithmConfig,
    Distribution,
    NoiseConfig,
    NoiseKind,
    NoiseSource,
    ScheduleKind,
    StepSchedule,
    synthetic_noise,
)
from .counterexample import CounterexampleResult, nc3t_counterexample
from .engine import (
    FixedPoint,
    MonteCarloResult,
    Reference,
    UpdateMap,
    fixed_point,
    reference_for,
    run,
    run_paths,
    step,
)
from .trace import TRACE_COLUMNS, Trace, consensus_residual

__all__ = [
    "AlgorithmConfig",
    "CounterexampleResult",
    "Distribution",
    "FixedPoint",
    "MonteCarloResult",
    "NoiseConfig",
    "NoiseKind",
    "NoiseSource",
    "Reference",
    "ScheduleKind",
    "StepSchedule",
    "TRACE_COLUMNS",
    "Trace",
    "UpdateMap",
    "consensus_residual",
    "fixed_point",
    "nc3t_counterexample",
    "reference_for",
    "run",
    "run_paths",
    "step",
    "synthetic_noise",
]
