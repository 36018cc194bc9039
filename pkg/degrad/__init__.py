"""
degrad: simulation and bound checking for decentralized gradient methods.

Runs GD, DGD, diffusion (ATC/CTA) and federated averaging over a consensus
weight matrix, computes closed-form contraction factors, fixed-point gaps and
error envelopes, and verifies that simulated trajectories stay inside them.
"""

from .config import Settings, get_settings
from .variants import Variant

__version__ = "1.0.0"

__all__ = ["Settings", "Variant", "get_settings", "__version__"]
