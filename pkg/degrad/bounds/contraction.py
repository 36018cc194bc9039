"""
Contraction factors of the noise-free update maps.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional

from ..middleware import DomainError, StepSizeError, validate_positive, validate_unit_interval
from ..topology import Topology, diffusion_norm
from ..variants import Variant

logger = logging.getLogger(__name__)


class Regime(str, Enum):
    LOWER_STEP = "lower_step"
    UPPER_STEP = "upper_step"


class MixingQuantities(NamedTuple):
    """Spectral quantities of W that the bounds consume."""
    lambda2: float
    lambdaN: float
    diffusion_norm: float

    @classmethod
    def from_topology(cls, t: Topology) -> "MixingQuantities":
        lambda2 = t.lambda2
        dnorm = diffusion_norm(t) if lambda2 < 1.0 - 1e-10 else float("inf")
        return cls(lambda2, t.lambdaN, dnorm)


@dataclass(frozen=True)
class ContractionSpec:
    factor: float
    regime: Regime
    eta_max: float
    valid: bool
    eta_lower: float
    per_iteration: float
    violated: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "c": self.factor,
            "c_outer": self.per_iteration,
            "regime": self.regime.value,
            "eta_lower": self.eta_lower,
            "eta_max": self.eta_max,
            "valid": self.valid,
            "violated": self.violated,
        }

    def require_valid(self) -> "ContractionSpec":
        if not self.valid:
            raise StepSizeError(
                f"update map is not a contraction: {self.violated}",
                inequality=self.violated,
                values={"c": self.factor, "eta_max": self.eta_max},
            )
        return self


def contraction_factor(
    variant: Variant,
    eta: float,
    mu: float,
    L: float,
    lambda2: float,
    lambdaN: float,
    T: int = 1,
    gamma: float = 1.0
) -> ContractionSpec:
    """Per-map factor c and per-outer-iteration factor c^T.

    lambda2 and lambdaN belong to the raw W; gamma maps them to 1 - gamma + gamma*lambda.
    """

    variant = Variant(variant)
    eta = validate_positive(eta, "eta")
    mu = validate_positive(mu, "mu")
    L = validate_positive(L, "L")
    if mu > L:
        raise DomainError(f"mu={mu} exceeds L={L}", "mu", mu)
    if T < 1:
        raise DomainError(f"T must be at least 1, got {T}", "T", T)
    gamma = validate_unit_interval(gamma, "gamma")
    lambdaN = 1.0 - gamma + gamma * lambdaN

    gd_factor = max(abs(1.0 - eta * mu), abs(1.0 - eta * L))

    if variant.uses_dgd_thresholds:
        eta_lower = (1.0 + lambdaN) / (L + mu)
        eta_max = (1.0 + lambdaN) / L
        upper_factor = eta * L - lambdaN
        final_factor = max(abs(1.0 - eta * mu), abs(lambdaN - eta * L))
        threshold_name = "(1 + lambda_N) / L"
    else:
        eta_lower = 2.0 / (L + mu)
        eta_max = 2.0 / L
        upper_factor = eta * L - 1.0
        final_factor = gd_factor
        threshold_name = "2 / L"

    violated = None
    if eta <= eta_lower:
        regime = Regime.LOWER_STEP
        factor = 1.0 - eta * mu
    elif eta < eta_max:
        regime = Regime.UPPER_STEP
        factor = upper_factor
    else:
        regime = Regime.UPPER_STEP
        factor = final_factor
        violated = f"eta={eta:.6g} >= {threshold_name}={eta_max:.6g}"

    if T > 1:
        # the T-1 pure local steps contract with the gradient-descent factor
        factor = max(factor, gd_factor)

    valid = factor < 1.0 and violated is None
    if not valid and violated is None:
        violated = f"factor {factor:.6g} >= 1"
    if not valid:
        logger.debug(f"{variant.value}: eta={eta} is outside the contraction regime ({violated})")

    return ContractionSpec(
        factor=factor,
        regime=regime,
        eta_max=eta_max,
        valid=valid,
        eta_lower=eta_lower,
        per_iteration=factor ** T,
        violated=violated,
    )


def contraction_for(
    variant: Variant,
    eta: float,
    mu: float,
    L: float,
    mixing: MixingQuantities,
    T: int = 1
) -> ContractionSpec:
    """Contraction of a variant over an already-scaled mixing matrix."""
    return contraction_factor(variant, eta, mu, L, mixing.lambda2, mixing.lambdaN, T)
