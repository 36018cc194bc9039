"""
Numerical check of the distance-bounding lemma.

For mu I <= A <= L I and Pi_1 v = 0, the solution of
(Z A + (I - W) / eta) d = -Z v satisfies ||d|| <= eta (L/mu) Lambda ||v||, with
Z = I for DGD and Z = W for diffusion (which also needs eta <= 1/(L Lambda)).
"""

import logging
from typing import NamedTuple, Optional

import numpy as np
from scipy import linalg
from scipy.stats import ortho_group

from ..middleware import NumericalError, StepSizeError, validate_positive
from ..topology import Topology
from ..variants import Variant
from .contraction import MixingQuantities
from .gap import topology_factor_of

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-12


class AuxCheckResult(NamedTuple):
    worst_ratio: float
    ratios: np.ndarray


def random_curvature(n: int, mu: float, L: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric matrix with eigenvalues drawn uniformly from [mu, L]."""

    values = rng.uniform(mu, L, size=n)
    if n == 1:
        return values.reshape(1, 1)
    U = ortho_group.rvs(n, random_state=rng)
    A = (U * values) @ U.T
    return 0.5 * (A + A.T)


def aux_distance_ratio(
    topo: Topology,
    eta: float,
    variant: Variant,
    A: np.ndarray,
    v: np.ndarray,
    mu: float,
    L: float,
    Lambda: Optional[float] = None
) -> float:
    """||d|| over its bound for one system; 0 when v = 0."""

    variant = Variant(variant)
    n = topo.n_agents
    W = topo.weights
    Z = W if variant.is_diffusion else np.eye(n)
    if Lambda is None:
        Lambda = topology_factor_of(variant, MixingQuantities.from_topology(topo))

    system = Z @ A + (np.eye(n) - W) / eta
    try:
        d = linalg.solve(system, -Z @ v)
    except linalg.LinAlgError as e:
        raise NumericalError(f"distance system is singular: {e}", operation="solve")

    norm_v = float(np.linalg.norm(v))
    norm_d = float(np.linalg.norm(d))
    bound = eta * (L / mu) * Lambda * norm_v
    if bound == 0.0:
        return 0.0 if norm_d <= ZERO_TOL * max(1.0, norm_v) else float("inf")
    return norm_d / bound


def aux_distance_check(
    topo: Topology,
    eta: float,
    variant: Variant,
    trials: int,
    rng: np.random.Generator,
    mu: float = 1.0,
    L: float = 4.0
) -> AuxCheckResult:
    """Worst ratio ||d|| / (eta (L/mu) Lambda ||v||) over random systems."""

    variant = Variant(variant)
    eta = validate_positive(eta, "eta")
    mixing = MixingQuantities.from_topology(topo)
    Lambda = topology_factor_of(variant, mixing)
    if variant.is_diffusion and Lambda > 0.0 and eta * L * Lambda > 1.0:
        raise StepSizeError(
            f"diffusion needs eta <= 1/(L Lambda) = {1.0 / (L * Lambda):.6g}",
            inequality="eta <= 1 / (L Lambda)",
            values={"eta": eta, "L": L, "Lambda": Lambda},
        )

    n = topo.n_agents
    ratios = np.empty(trials)
    for k in range(trials):
        A = random_curvature(n, mu, L, rng)
        v = rng.standard_normal(n)
        v -= v.mean()
        ratios[k] = aux_distance_ratio(topo, eta, variant, A, v, mu, L, Lambda)

    worst = float(ratios.max()) if trials else 0.0
    logger.debug(f"Distance lemma over {trials} systems: worst ratio {worst:.6g}")
    return AuxCheckResult(worst_ratio=worst, ratios=ratios)
