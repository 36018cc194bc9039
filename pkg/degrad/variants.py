"""
Algorithm variants shared by the dynamics and bounds packages.
"""

from enum import Enum

from .topology import FactorKind


class Variant(str, Enum):
    """First-order method family; all share X+ = W X - eta Z grad f(X)."""

    GD = "gd"
    DGD = "dgd"
    DIFFUSION_ATC = "diffusion_atc"
    DIFFUSION_CTA = "diffusion_cta"
    FEDERATED = "federated"

    @property
    def factor_kind(self) -> FactorKind:
        if self in (Variant.GD, Variant.DGD):
            return FactorKind.DGD
        return FactorKind.DIFFUSION

    @property
    def uses_dgd_thresholds(self) -> bool:
        """DGD's admissible steps shrink with lambda_N; the others do not."""
        return self is Variant.DGD

    @property
    def is_diffusion(self) -> bool:
        return self in (Variant.DIFFUSION_ATC, Variant.DIFFUSION_CTA, Variant.FEDERATED)
