"""
Bounds package: contraction factors, fixed-point gaps and error envelopes.
"""

from .auxiliary import AuxCheckResult, aux_distance_check, aux_distance_ratio, random_curvature
from .contraction import ContractionSpec, MixingQuantities, Regime, contraction_factor, contraction_for
from .envelopes import (
    EnvelopeKind,
    ErrorEnvelope,
    GeometricEnvelope,
    TimeVaryingEnvelope,
    decay_class,
    nc3t_dhat,
    nc3t_rate,
    time_varying_envelope,
    total_error_envelope,
)
from .gap import GapBound, fixed_point_gap_bound, topology_factor_of
from .report import BoundReport

__all__ = [
    "AuxCheckResult",
    "BoundReport",
    "ContractionSpec",
    "EnvelopeKind",
    "ErrorEnvelope",
    "GapBound",
    "GeometricEnvelope",
    "MixingQuantities",
    "Regime",
    "TimeVaryingEnvelope",
    "aux_distance_check",
    "aux_distance_ratio",
    "contraction_factor",
    "contraction_for",
    "decay_class",
    "fixed_point_gap_bound",
    "nc3t_dhat",
    "nc3t_rate",
    "random_curvature",
    "time_varying_envelope",
    "topology_factor_of",
    "total_error_envelope",
]
