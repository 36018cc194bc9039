"""
Per-iteration error envelopes.

A noisy recursion x+ = phi(x) + eps with contraction factor c and noise obeying
sqrt(E||eps||^2) <= sigma + omega ||x|| has RMS distance to the fixed point at
most

    dhat + sqrt(c^2 + omega^2)^(n t) (||x_0 - x_hat|| - dhat)^+

for n concatenated maps per outer iteration, with
dhat = (omega M + sigma) / (sqrt(1 - c^2) - omega).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..middleware import DivergenceConditionError, DomainError, StepSizeError, validate_positive

logger = logging.getLogger(__name__)


class EnvelopeKind(str, Enum):
    NOISE_FREE = "noise_free"
    GRADIENT_NOISE = "gradient_noise"
    COMM_NOISE = "comm_noise"
    MULTI_T_GRADIENT_NOISE = "multi_t_gradient_noise"
    RANDOM_TOPOLOGY = "random_topology"


def nc3t_rate(c: float, omega: float, n: int = 1) -> float:
    """Effective contraction sqrt(c^2 + omega^2), raised to the number of maps."""
    return math.sqrt(c * c + omega * omega) ** n


def nc3t_dhat(c: float, omega: float, sigma: float, M: float = 0.0, n: int = 1) -> float:
    """Asymptotic RMS radius around the fixed point; independent of n."""

    validate_positive(c, "c", allow_zero=True)
    omega = validate_positive(omega, "omega", allow_zero=True)
    sigma = validate_positive(sigma, "sigma", allow_zero=True)
    M = validate_positive(M, "M", allow_zero=True)
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}", "n", n)
    if c * c + omega * omega >= 1.0:
        raise DivergenceConditionError(
            f"c^2 + omega^2 = {c * c + omega * omega:.6g} is not below 1", c=c, omega=omega
        )
    return (omega * M + sigma) / (math.sqrt(1.0 - c * c) - omega)


@dataclass(frozen=True)
class GeometricEnvelope:
    """floor + rate^t * transient, evaluated pointwise."""
    floor: float
    rate: float
    transient: float

    def __call__(self, t: Any) -> Any:
        t = np.asarray(t, dtype=float)
        values = self.floor + self.rate ** t * self.transient
        return float(values) if values.ndim == 0 else values

    def sample(self, n_iters: int) -> np.ndarray:
        return np.asarray(self(np.arange(n_iters + 1)))

    @property
    def asymptote(self) -> float:
        return self.floor

    def to_dict(self) -> Dict[str, float]:
        return {"floor": self.floor, "rate": self.rate, "transient": self.transient}


@dataclass(frozen=True)
class ErrorEnvelope:
    """Envelopes around the fixed point and around the optimum."""
    kind: EnvelopeKind
    to_fixed: GeometricEnvelope
    to_opt: GeometricEnvelope
    c: float
    nu: float
    dhat: float = 0.0
    dhat_simplified: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    def __call__(self, t: Any) -> Any:
        return self.to_opt(t)


def _noise_scales(kind: EnvelopeKind, eta: float, gamma: float, sigma: float, omega: float):
    if kind in (EnvelopeKind.GRADIENT_NOISE, EnvelopeKind.MULTI_T_GRADIENT_NOISE):
        return eta * sigma, eta * omega
    if kind is EnvelopeKind.RANDOM_TOPOLOGY:
        return 0.0, gamma * omega
    return gamma * sigma, gamma * omega


def total_error_envelope(
    kind: EnvelopeKind,
    *,
    c: float,
    eta: float,
    mu: float,
    dist0_opt: float,
    gap: float,
    dist0_fixed: Optional[float] = None,
    T: int = 1,
    sigma: float = 0.0,
    omega: float = 0.0,
    gamma: float = 1.0,
    M: float = 0.0
) -> ErrorEnvelope:
    """Compose the fixed-point envelope with the fixed-point gap.

    ``c`` is the per-map contraction factor; ``gap`` bounds ||x_hat - x*||. For
    random topologies pass omega = sqrt(tighter_sum) of the link-noise bound;
    sigma is ignored there.
    """

    kind = EnvelopeKind(kind)
    if not 0.0 <= c < 1.0:
        raise StepSizeError(
            f"contraction factor c={c:.6g} is not below 1", inequality="c < 1", values={"c": c}
        )
    if T < 1:
        raise DomainError(f"T must be at least 1, got {T}", "T", T)
    if kind is EnvelopeKind.GRADIENT_NOISE and T != 1:
        kind = EnvelopeKind.MULTI_T_GRADIENT_NOISE
    if dist0_fixed is None:
        dist0_fixed = dist0_opt + gap

    notes: List[str] = []
    if kind is EnvelopeKind.NOISE_FREE:
        rate = c ** T
        return ErrorEnvelope(
            kind=kind,
            to_fixed=GeometricEnvelope(0.0, rate, dist0_fixed),
            to_opt=GeometricEnvelope(gap, rate, dist0_fixed),
            c=c,
            nu=c,
            notes=["noise-free: c^(T t) ||x_0 - x_hat|| + ||x_hat - x*||"],
        )

    sigma_eff, omega_eff = _noise_scales(kind, eta, gamma, sigma, omega)
    if c * c + omega_eff * omega_eff >= 1.0:
        raise StepSizeError(
            f"noisy contraction needs c^2 + omega'^2 < 1, got {c * c + omega_eff * omega_eff:.6g}",
            inequality="c^2 + omega'^2 < 1",
            values={"c": c, "omega_eff": omega_eff},
        )
    dhat = nc3t_dhat(c, omega_eff, sigma_eff, M, T)
    nu = nc3t_rate(c, omega_eff)
    rate = nu ** T
    root = math.sqrt(1.0 - c * c)

    simplified: Optional[float] = None
    if kind in (EnvelopeKind.GRADIENT_NOISE, EnvelopeKind.MULTI_T_GRADIENT_NOISE):
        if eta / (root - eta * omega) <= math.sqrt(eta / mu):
            simplified = math.sqrt(eta) * (omega * M + sigma) / math.sqrt(mu)
            notes.append("simplified dhat = sqrt(eta) (omega M + sigma) / sqrt(mu)")
        else:
            notes.append("step too large for the sqrt(eta) simplification; exact dhat used")
    else:
        if root - omega_eff >= math.sqrt(eta * mu):
            simplified = (omega_eff * M + sigma_eff) / math.sqrt(eta * mu)
            notes.append("simplified dhat = gamma (omega M + sigma) / sqrt(eta mu)")
        elif kind is EnvelopeKind.COMM_NOISE:
            raise StepSizeError(
                "gamma / sqrt(eta) is too large for the communication-noise bound",
                inequality="sqrt(1 - c^2) - gamma omega >= sqrt(eta mu)",
                values={"eta": eta, "gamma": gamma, "omega": omega, "c": c},
            )

    logger.debug(f"{kind.value} envelope: dhat={dhat:.4g}, nu={nu:.6g}")
    return ErrorEnvelope(
        kind=kind,
        to_fixed=GeometricEnvelope(dhat, rate, max(dist0_fixed - dhat, 0.0)),
        to_opt=GeometricEnvelope(dhat + gap, rate, max(dist0_opt + gap - dhat, 0.0)),
        c=c,
        nu=nu,
        dhat=dhat,
        dhat_simplified=simplified,
        notes=notes,
    )


def decay_class(eta0: float, mu: float, tau: float) -> str:
    """Asymptotic decay of the time-varying envelope for eta_t = eta0 / (t/tau + 1)."""

    if math.isinf(tau):
        return "geometric"
    a = eta0 * mu * tau
    if abs(a - 1.0) <= 1e-12:
        return "log(t)/t"
    if a > 1.0:
        return "1/t"
    return f"t^-{a:.6g}"


class TimeVaryingEnvelope:
    """Exact envelope for eta_t = eta0 / (t/tau + 1), evaluated by recursion.

    e_0 = ||x_0 - x*|| + eta_0 (L/mu) Lambda g
    e_{t+1} = (1 - eta_t mu) e_t + 2 (L/mu) Lambda g |eta_t - eta_{t+1}|
    ||x_t - x*|| <= e_t + eta_t (L/mu) Lambda g
    """

    def __init__(
        self,
        eta0: float,
        tau: float,
        mu: float,
        L: float,
        Lambda: float,
        grad_norm: float,
        dist0_opt: float
    ):
        self.eta0 = eta0
        self.tau = tau
        self.mu = mu
        self.drift = (L / mu) * Lambda * grad_norm
        self.dist0_opt = dist0_opt
        self.decay = decay_class(eta0, mu, tau)
        self._to_fixed = np.array([dist0_opt + eta0 * self.drift])

    def eta_at(self, t: Any) -> Any:
        t = np.asarray(t, dtype=float)
        if math.isinf(self.tau):
            return np.full_like(t, self.eta0)
        return self.eta0 / (t / self.tau + 1.0)

    def _extend(self, n_iters: int) -> None:
        have = self._to_fixed.size - 1
        if n_iters <= have:
            return
        values = np.empty(n_iters + 1)
        values[: have + 1] = self._to_fixed
        etas = self.eta_at(np.arange(n_iters + 1))
        for t in range(have, n_iters):
            values[t + 1] = (1.0 - etas[t] * self.mu) * values[t] + 2.0 * self.drift * abs(
                etas[t] - etas[t + 1]
            )
        self._to_fixed = values

    def to_fixed(self, n_iters: int) -> np.ndarray:
        """Bound on ||x_t - x_hat_t|| for t = 0..n_iters."""
        self._extend(n_iters)
        return self._to_fixed[: n_iters + 1].copy()

    def sample(self, n_iters: int) -> np.ndarray:
        """Bound on ||x_t - x*|| for t = 0..n_iters."""
        etas = self.eta_at(np.arange(n_iters + 1))
        return self.to_fixed(n_iters) + etas * self.drift

    def __call__(self, t: Any) -> Any:
        t_arr = np.asarray(t, dtype=int)
        values = self.sample(int(t_arr.max()) if t_arr.size else 0)[t_arr]
        return float(values) if values.ndim == 0 else values


def time_varying_envelope(
    eta0: float,
    tau: float,
    mu: float,
    L: float,
    Lambda: float,
    grad_norm: float,
    dist0_opt: float,
    *,
    eta_lower: Optional[float] = None
) -> TimeVaryingEnvelope:
    """Envelope for the ~1/t schedule; ``eta_lower`` is the lower-step threshold of the variant."""

    eta0 = validate_positive(eta0, "eta0")
    tau = validate_positive(tau, "tau", allow_inf=True)
    mu = validate_positive(mu, "mu")
    L = validate_positive(L, "L")
    Lambda = validate_positive(Lambda, "Lambda", allow_zero=True)
    if eta_lower is not None and eta0 > eta_lower:
        raise StepSizeError(
            f"eta0={eta0:.6g} exceeds the lower-step threshold {eta_lower:.6g}",
            inequality="eta0 <= eta_lower",
            values={"eta0": eta0, "eta_lower": eta_lower},
        )
    if eta0 * L * (L / mu) * Lambda > 1.0:
        raise StepSizeError(
            "fixed-point drift bound needs eta0 L (L/mu) Lambda <= 1",
            inequality="eta0 L (L/mu) Lambda <= 1",
            values={"eta0": eta0, "L": L, "mu": mu, "Lambda": Lambda},
        )
    if eta0 * mu >= 1.0:
        raise StepSizeError(
            "eta0 mu must be below 1", inequality="eta0 mu < 1", values={"eta0": eta0, "mu": mu}
        )
    return TimeVaryingEnvelope(eta0, tau, mu, L, Lambda, grad_norm, dist0_opt)
