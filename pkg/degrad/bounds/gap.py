"""
Distance between the fixed point and the global optimum.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List

from ..middleware import StepSizeError, validate_positive
from ..variants import Variant
from .contraction import MixingQuantities, contraction_for

logger = logging.getLogger(__name__)

SECOND_ORDER_THRESHOLD = 0.1
SECOND_ORDER_CONSTANT = 10.0


@dataclass(frozen=True)
class GapBound:
    value: float
    Lambda: float
    second_order: bool = False
    slack: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def with_slack(self) -> float:
        return self.value + self.slack

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gap": self.value,
            "Lambda": self.Lambda,
            "second_order": self.second_order,
            "gap_slack": self.slack,
        }


def topology_factor_of(variant: Variant, mixing: MixingQuantities) -> float:
    """Lambda from precomputed spectral quantities."""

    variant = Variant(variant)
    if variant is Variant.FEDERATED:
        return 0.0
    if mixing.lambda2 >= 1.0 - 1e-10:
        return math.inf
    if variant.is_diffusion:
        return 2.0 * mixing.diffusion_norm
    return 1.0 / (1.0 - mixing.lambda2)


def fixed_point_gap_bound(
    variant: Variant,
    eta: float,
    T: int,
    mu: float,
    L: float,
    mixing: MixingQuantities,
    grad_norm: float
) -> GapBound:
    """First-order bound on ||x_hat - x*|| plus the flag for suppressed O((eta T)^2) terms.

    T = 1: eta (L/mu) Lambda ||grad f(x*)||. For T > 1 the coefficient gains the
    local-drift term (T - 1) L / (2 mu). CTA adds eta ||grad f(x*)|| to the ATC
    value because its fixed point is one gradient step away from ATC's.
    """

    variant = Variant(variant)
    eta = validate_positive(eta, "eta")
    grad_norm = validate_positive(grad_norm, "grad_norm", allow_zero=True)
    contraction_for(variant, eta, mu, L, mixing, T).require_valid()

    kappa = L / mu
    if variant is Variant.FEDERATED:
        mixing = MixingQuantities(0.0, 0.0, 0.0)
    Lambda = topology_factor_of(variant, mixing)
    if math.isinf(Lambda):
        raise StepSizeError(
            "no disagreement gap: lambda2 = 1",
            inequality="lambda2 < 1",
            values={"lambda2": mixing.lambda2},
        )
    notes: List[str] = []

    if T == 1:
        if variant.is_diffusion and Lambda > 0.0 and eta * L * Lambda > 1.0:
            raise StepSizeError(
                f"diffusion gap bound needs eta <= 1/(L Lambda) = {1.0 / (L * Lambda):.6g}",
                inequality="eta <= 1 / (L Lambda)",
                values={"eta": eta, "L": L, "Lambda": Lambda},
            )
        coefficient = kappa * Lambda
        if variant in (Variant.GD, Variant.DGD):
            notes.append(
                "equivalent DGD form: eta (1 + L/mu) ||grad f(x*)|| / (1 - lambda2) "
                f"= {eta * (1.0 + kappa) * Lambda * grad_norm:.6g}"
            )
    elif variant is Variant.GD:
        coefficient = (T - 1) / 2.0 * kappa
    elif variant is Variant.DGD:
        coefficient = (T - 1) / 2.0 * kappa + (1.0 + kappa) * (
            (T - 1) * mixing.diffusion_norm + 1.0 / (1.0 - mixing.lambda2)
        )
    else:
        coefficient = (T - 1) / 2.0 * kappa + T * (1.0 + kappa) * mixing.diffusion_norm

    value = eta * coefficient * grad_norm
    if variant is Variant.DIFFUSION_CTA:
        if eta * L > 2.0:
            raise StepSizeError(
                "CTA gap bound needs eta L <= 2",
                inequality="eta L <= 2",
                values={"eta": eta, "L": L},
            )
        # x_cta = x_atc - eta grad f(x_atc), and with eta L <= 2 that step moves
        # at most eta ||grad f(x*)|| further from x*
        value += eta * grad_norm
        notes.append("CTA: ATC bound plus one gradient step eta ||grad f(x*)||")

    second_order = False
    slack = 0.0
    if T > 1:
        second_order = eta * T * L > SECOND_ORDER_THRESHOLD
        slack = SECOND_ORDER_CONSTANT * (eta * T * L) ** 2 * grad_norm / mu
        if second_order:
            logger.info(f"eta T L = {eta * T * L:.3g}: suppressed second-order terms may dominate")
            notes.append("second-order terms flagged: eta T L > 0.1")

    return GapBound(
        value=value,
        Lambda=Lambda,
        second_order=second_order,
        slack=slack,
        notes=notes,
    )
