"""
Configuration values for one simulated algorithm: variant, step schedule and
noise model.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..middleware import DomainError, validate_positive, validate_unit_interval
from ..topology import LinkFailureModel
from ..variants import Variant


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    INVERSE_TIME = "inverse_time"


@dataclass(frozen=True)
class StepSchedule:
    """eta_t = eta0 / (t / tau + 1); tau = inf gives a constant step."""

    kind: ScheduleKind
    eta0: float
    tau: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        validate_positive(self.eta0, "eta")
        validate_positive(self.tau, "tau", allow_inf=True)
        if self.kind is ScheduleKind.CONSTANT and not math.isinf(self.tau):
            object.__setattr__(self, "tau", math.inf)

    @classmethod
    def constant(cls, eta: float) -> "StepSchedule":
        return cls(ScheduleKind.CONSTANT, eta)

    @classmethod
    def inverse_time(cls, eta0: float, tau: float) -> "StepSchedule":
        return cls(ScheduleKind.INVERSE_TIME, eta0, tau)

    @property
    def is_constant(self) -> bool:
        return self.kind is ScheduleKind.CONSTANT

    @property
    def eta(self) -> float:
        return self.eta0

    def eta_at(self, t: int) -> float:
        if self.is_constant:
            return self.eta0
        return self.eta0 / (t / self.tau + 1.0)

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind.value, "eta0": self.eta0}
        if not self.is_constant:
            payload["tau"] = self.tau
        return payload


@dataclass(frozen=True)
class AlgorithmConfig:
    variant: Variant
    step: StepSchedule
    local_updates: int = 1
    consensus_gamma: float = 1.0
    consensus_rounds: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if int(self.local_updates) < 1:
            raise DomainError(
                f"local_updates must be at least 1, got {self.local_updates}",
                "local_updates",
                self.local_updates,
            )
        object.__setattr__(self, "local_updates", int(self.local_updates))
        validate_unit_interval(self.consensus_gamma, "consensus_gamma")
        if self.consensus_rounds is not None:
            object.__setattr__(self, "consensus_rounds", tuple(float(a) for a in self.consensus_rounds))
        if not self.step.is_constant and self.local_updates > 1:
            raise DomainError(
                "time-varying step sizes are supported only with a single local update",
                "local_updates",
                self.local_updates,
            )

    @property
    def T(self) -> int:
        return self.local_updates

    def with_step(self, step: StepSchedule) -> "AlgorithmConfig":
        return AlgorithmConfig(
            self.variant, step, self.local_updates, self.consensus_gamma, self.consensus_rounds
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "step": self.step.to_dict(),
            "local_updates": self.local_updates,
            "consensus_gamma": self.consensus_gamma,
            "consensus_rounds": list(self.consensus_rounds) if self.consensus_rounds else None,
        }


class NoiseKind(str, Enum):
    NONE = "none"
    GRADIENT_SAMPLING = "gradient_sampling"
    COMMUNICATION = "communication"
    LINK_FAILURE = "link_failure"


class NoiseSource(str, Enum):
    ENSEMBLE = "ensemble"
    SYNTHETIC = "synthetic"


class Distribution(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"


@dataclass(frozen=True)
class NoiseConfig:
    """Noise model; synthetic noise has standard deviation sigma + omega ||X||."""

    kind: NoiseKind = NoiseKind.NONE
    source: NoiseSource = NoiseSource.SYNTHETIC
    sigma: float = 0.0
    omega: float = 0.0
    distribution: Distribution = Distribution.GAUSSIAN
    link_model: Optional[LinkFailureModel] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        object.__setattr__(self, "source", NoiseSource(self.source))
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        validate_positive(self.sigma, "sigma", allow_zero=True)
        validate_positive(self.omega, "omega", allow_zero=True)
        if self.kind is NoiseKind.LINK_FAILURE and self.link_model is None:
            raise DomainError("link-failure noise needs a link model", "link_model")

    @classmethod
    def none(cls) -> "NoiseConfig":
        return cls()

    @classmethod
    def gradient(
        cls,
        sigma: float = 0.0,
        omega: float = 0.0,
        distribution: Distribution = Distribution.GAUSSIAN,
        source: NoiseSource = NoiseSource.SYNTHETIC
    ) -> "NoiseConfig":
        return cls(NoiseKind.GRADIENT_SAMPLING, source, sigma, omega, distribution)

    @classmethod
    def communication(
        cls,
        sigma: float = 0.0,
        omega: float = 0.0,
        distribution: Distribution = Distribution.GAUSSIAN
    ) -> "NoiseConfig":
        return cls(NoiseKind.COMMUNICATION, NoiseSource.SYNTHETIC, sigma, omega, distribution)

    @classmethod
    def link_failure(cls, model: LinkFailureModel) -> "NoiseConfig":
        return cls(NoiseKind.LINK_FAILURE, link_model=model)

    @property
    def is_noisy(self) -> bool:
        return self.kind is not NoiseKind.NONE

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind in (NoiseKind.GRADIENT_SAMPLING, NoiseKind.COMMUNICATION):
            payload.update(
                source=self.source.value,
                sigma=self.sigma,
                omega=self.omega,
                distribution=self.distribution.value,
            )
        if self.link_model is not None:
            payload.update(
                success_probs=self.link_model.success_probs.tolist(),
                mode=self.link_model.mode.value,
            )
        return payload


def synthetic_noise(
    scale: float,
    shape: Tuple[int, ...],
    distribution: Distribution,
    rng: np.random.Generator,
    size: Optional[int] = None
) -> np.ndarray:
    """Zero-mean noise with E||eps||^2 = scale^2 over the given shape.

    Gaussian noise meets the second moment in expectation; the two-point
    (Rademacher-scaled) draw meets it on every sample.
    """

    full_shape = tuple(shape) if size is None else (int(size),) + tuple(shape)
    per_entry = scale / math.sqrt(float(np.prod(shape)))
    if distribution is Distribution.RADEMACHER:
        signs = rng.integers(0, 2, size=full_shape) * 2.0 - 1.0
        return per_entry * signs
    return per_entry * rng.standard_normal(full_shape)
