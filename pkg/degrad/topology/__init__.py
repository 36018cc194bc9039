"""
Topology package: consensus weight matrices, spectra and link failures.
"""

from .link_failure import (
    LinkFailureModel,
    LinkNoiseBound,
    ProbabilityMode,
    expected_Q,
    expected_topology,
    link_noise_variance_bound,
    sample_link_failure,
)
from .weights import (
    FactorKind,
    SpectrumReport,
    Topology,
    ToyKind,
    ValidityReport,
    build_toy,
    combine_rounds,
    complete_weights,
    diffusion_norm,
    from_edges,
    from_laplacian,
    pseudo_inverse_gap,
    random_connected,
    scale_consensus,
    single_agent,
    spectral_summary,
    spectrum,
    topology_factor,
    toy_spectral_gap,
    validate,
)

__all__ = [
    "FactorKind",
    "LinkFailureModel",
    "LinkNoiseBound",
    "ProbabilityMode",
    "SpectrumReport",
    "Topology",
    "ToyKind",
    "ValidityReport",
    "build_toy",
    "combine_rounds",
    "complete_weights",
    "diffusion_norm",
    "expected_Q",
    "expected_topology",
    "from_edges",
    "from_laplacian",
    "link_noise_variance_bound",
    "pseudo_inverse_gap",
    "random_connected",
    "sample_link_failure",
    "scale_consensus",
    "single_agent",
    "spectral_summary",
    "spectrum",
    "topology_factor",
    "toy_spectral_gap",
    "validate",
]
