"""
Random link failures.

Each directed transmission n' -> n succeeds independently with probability
p_nn'. The realized mixing matrix Q keeps the surviving weights and repairs its
diagonal so that the iteration stays a consensus average; E[Q] is symmetric.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from ..middleware import DomainError, TopologyError, ValidationError, validate_symmetric
from .weights import Topology, validate

logger = logging.getLogger(__name__)


class ProbabilityMode(str, Enum):
    """Whether receivers know the success probabilities of their links."""
    KNOWN = "known"
    UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class LinkFailureModel:
    success_probs: np.ndarray
    mode: ProbabilityMode = ProbabilityMode.KNOWN

    def __post_init__(self):
        probs = validate_symmetric(self.success_probs, "success_probs").copy()
        if np.any(probs < 0.0) or np.any(probs > 1.0):
            raise DomainError("success probabilities must lie in [0, 1]", "success_probs")
        # self-transmission never fails
        np.fill_diagonal(probs, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, "success_probs", probs)
        object.__setattr__(self, "mode", ProbabilityMode(self.mode))

    @classmethod
    def uniform(cls, n: int, p: float, mode: ProbabilityMode = ProbabilityMode.KNOWN) -> "LinkFailureModel":
        return cls(np.full((n, n), float(p)), mode)


class LinkNoiseBound(NamedTuple):
    coefficient: float
    tighter_sum: float


def _checked_probs(t: Topology, model: LinkFailureModel) -> np.ndarray:
    p = model.success_probs
    if p.shape != t.weights.shape:
        raise ValidationError(
            f"success_probs shape {p.shape} does not match topology {t.weights.shape}",
            "success_probs",
        )
    support = t.support()
    if np.any(p[support] <= 0.0):
        raise DomainError(
            "success probabilities must lie in (0, 1] on the support of W",
            "success_probs",
        )

    report = validate(t)
    if not report.is_nonnegative or report.is_bipartite:
        raise TopologyError(
            "link failures need a nonnegative, non-bipartite weight matrix",
            check="link_failure_support",
            diagnostics={
                "is_nonnegative": report.is_nonnegative,
                "is_bipartite": report.is_bipartite,
            },
        )
    return p


def _off_diagonal(matrix: np.ndarray) -> np.ndarray:
    out = matrix.copy()
    idx = np.arange(out.shape[-1])
    out[..., idx, idx] = 0.0
    return out


def sample_link_failure(
    t: Topology,
    model: LinkFailureModel,
    rng: np.random.Generator,
    size: Optional[int] = None,
    *,
    check: bool = True
) -> np.ndarray:
    """Draw one realized Q (or ``size`` of them stacked on axis 0).

    Callers that sample every iteration validate once and pass check=False.
    """

    p = _checked_probs(t, model) if check else model.success_probs
    W = t.weights
    n = t.n_agents
    shape = (n, n) if size is None else (int(size), n, n)

    survived = rng.random(shape) < p
    received = _off_diagonal(np.where(survived, W, 0.0))

    if model.mode is ProbabilityMode.KNOWN:
        expected_in = _off_diagonal(p * W).sum(axis=-1)
        diagonal = 1.0 - expected_in
    else:
        diagonal = 1.0 - received.sum(axis=-1)

    Q = received
    idx = np.arange(n)
    Q[..., idx, idx] = diagonal
    logger.debug(f"Sampled link-failure matrix batch of shape {Q.shape}")
    return Q


def expected_Q(t: Topology, model: LinkFailureModel) -> np.ndarray:
    """Mean of the realized mixing matrix."""

    p = _checked_probs(t, model)
    off = _off_diagonal(p * t.weights)
    expected = off.copy()
    np.fill_diagonal(expected, 1.0 - off.sum(axis=1))
    return expected


def link_noise_variance_bound(t: Topology, model: LinkFailureModel) -> LinkNoiseBound:
    """Bounds on E[||(Q - E[Q]) x||^2] / ||x||^2."""

    p = _checked_probs(t, model)
    per_link = _off_diagonal(p * (1.0 - p) * t.weights ** 2).sum()
    n = t.n_agents
    if model.mode is ProbabilityMode.KNOWN:
        return LinkNoiseBound(coefficient=n / 4.0, tighter_sum=float(per_link))
    # the realized diagonal repair doubles the variance
    return LinkNoiseBound(coefficient=n / 2.0, tighter_sum=float(2.0 * per_link))


def expected_topology(t: Topology, model: LinkFailureModel) -> Topology:
    """E[Q] as a topology, for fixed points and bounds of the mean dynamics."""

    expected = expected_Q(t, model)
    expected = 0.5 * (expected + expected.T)
    return Topology.from_weights(expected)

