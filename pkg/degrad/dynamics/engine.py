"""
Update maps of the decentralized first-order methods.

Every variant shares the unified iteration X+ = W X - eta Z grad f(X). One outer
iteration performs T - 1 pure local gradient steps followed by the
variant-specific consensus step:

    DGD / GD:      X+ = W X - eta grad f(X)
    ATC diffusion: X+ = W (X - eta grad f(X))
    CTA diffusion: X+ = W X - eta grad f(W X)
    Federated:     ATC with the complete-graph average 11^T / N
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Union

import numpy as np

from ..bounds.contraction import contraction_factor
from ..config import Settings, get_settings
from ..middleware import (
    ConvergenceError,
    DomainError,
    StepSizeError,
    log_performance,
    validate_positive,
)
from ..objectives import ObjectiveEnsemble
from ..topology import (
    Topology,
    combine_rounds,
    complete_weights,
    expected_topology,
    sample_link_failure,
    scale_consensus,
    single_agent,
)
from ..variants import Variant
from .config import AlgorithmConfig, NoiseConfig, NoiseKind, NoiseSource, synthetic_noise
from .trace import Trace, consensus_residual

logger = logging.getLogger(__name__)

RngLike = Union[np.random.Generator, int, None]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


class UpdateMap:
    """One configured outer iteration, with its mixing matrix resolved up front."""

    def __init__(
        self,
        cfg: AlgorithmConfig,
        topo: Topology,
        ens: ObjectiveEnsemble,
        noise: Optional[NoiseConfig] = None
    ):
        self.cfg = cfg
        self.topo = topo
        self.ens = ens
        self.noise = noise or NoiseConfig.none()
        self.gamma = cfg.consensus_gamma
        n = ens.n_agents

        variant = cfg.variant
        if variant is not Variant.GD and topo.n_agents != n:
            raise DomainError(
                f"topology has {topo.n_agents} agents, ensemble has {n}",
                "n_agents",
                topo.n_agents,
            )

        self._link = None
        if self.noise.kind is NoiseKind.LINK_FAILURE:
            if variant is not Variant.DGD:
                raise DomainError(
                    "link failures are modeled for the DGD variant only", "variant", variant.value
                )
            if cfg.consensus_rounds:
                raise DomainError(
                    "link failures cannot be combined with multiple consensus rounds",
                    "consensus_rounds",
                    cfg.consensus_rounds,
                )
            # validates the model against W once; per-iteration draws skip the check
            self.mixing = scale_consensus(expected_topology(topo, self.noise.link_model), self.gamma)
            self._link = self.noise.link_model
        elif variant is Variant.GD:
            if n != 1:
                raise DomainError(
                    f"gradient descent runs a single agent, got {n}", "n_agents", n
                )
            self.mixing = single_agent()
        elif variant is Variant.FEDERATED:
            self.mixing = Topology.from_weights(complete_weights(n))
        else:
            mixing = topo
            if cfg.consensus_rounds:
                mixing = combine_rounds(mixing, cfg.consensus_rounds)
            self.mixing = scale_consensus(mixing, self.gamma)

        self._quadratic = ens.is_quadratic
        if self._quadratic:
            self._H = np.stack([f.H for f in ens.locals])
            self._c = np.stack([f.c for f in ens.locals])

    @property
    def variant(self) -> Variant:
        return self.cfg.variant

    def noise_free(self) -> "UpdateMap":
        """Same map without noise; link failures keep their mean mixing matrix."""

        clone = object.__new__(UpdateMap)
        clone.__dict__.update(self.__dict__)
        clone.noise = NoiseConfig.none()
        clone._link = None
        return clone

    def gradient(self, X: np.ndarray) -> np.ndarray:
        if self._quadratic:
            return np.einsum("nij,nj->ni", self._H, X) + self._c
        return self.ens.grad_stack(X)

    def _local_gradient(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        noise = self.noise
        if noise.kind is not NoiseKind.GRADIENT_SAMPLING:
            return self.gradient(X)
        if noise.source is NoiseSource.ENSEMBLE:
            noisy, _ = self.ens.sample_stochastic_grad(X, rng)
            return noisy
        scale = noise.sigma + noise.omega * float(np.linalg.norm(X))
        return self.gradient(X) + synthetic_noise(scale, X.shape, noise.distribution, rng)

    def _mixing_matrix(self, rng: np.random.Generator) -> np.ndarray:
        if self._link is None:
            return self.mixing.weights
        Q = sample_link_failure(self.topo, self._link, rng, check=False)
        if self.gamma == 1.0:
            return Q
        return (1.0 - self.gamma) * np.eye(Q.shape[0]) + self.gamma * Q

    def _consensus_step(self, X: np.ndarray, eta: float, rng: np.random.Generator) -> np.ndarray:
        M = self._mixing_matrix(rng)
        variant = self.variant
        if variant in (Variant.GD, Variant.DGD):
            return M @ X - eta * self._local_gradient(X, rng)
        if variant is Variant.DIFFUSION_CTA:
            Y = M @ X
            return Y - eta * self._local_gradient(Y, rng)
        return M @ (X - eta * self._local_gradient(X, rng))

    def apply(self, X: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        eta = self.cfg.step.eta_at(t)

        for _ in range(self.cfg.T - 1):
            X = X - eta * self._local_gradient(X, rng)

        # communication noise scales with the input of the consensus map
        X_in = X
        X = self._consensus_step(X, eta, rng)

        noise = self.noise
        if noise.kind is NoiseKind.COMMUNICATION:
            scale = noise.sigma + noise.omega * float(np.linalg.norm(X_in))
            X = X + self.gamma * synthetic_noise(scale, X.shape, noise.distribution, rng)
        return X

    def intermediate_norms(self, X: np.ndarray) -> List[float]:
        """Norms of X pushed through the T noise-free sub-maps of one outer iteration."""

        eta = self.cfg.step.eta_at(0)
        norms = []
        for _ in range(self.cfg.T - 1):
            X = X - eta * self.gradient(X)
            norms.append(float(np.linalg.norm(X)))
        X = self.noise_free()._consensus_step(X, eta, np.random.default_rng(0))
        norms.append(float(np.linalg.norm(X)))
        return norms


def _initial(X0: np.ndarray, ens: ObjectiveEnsemble) -> np.ndarray:
    X = np.asarray(X0, dtype=float)
    if X.ndim == 1 and ens.dim == 1:
        X = X[:, None]
    if X.shape != (ens.n_agents, ens.dim):
        raise DomainError(
            f"iterate matrix has shape {X.shape}, expected {(ens.n_agents, ens.dim)}", "X0", X
        )
    return X


def step(
    X: np.ndarray,
    t: int,
    cfg: AlgorithmConfig,
    topo: Topology,
    ens: ObjectiveEnsemble,
    noise: Optional[NoiseConfig] = None,
    rng: RngLike = None
) -> np.ndarray:
    """Exactly one outer iteration."""
    return UpdateMap(cfg, topo, ens, noise).apply(_initial(X, ens), t, _as_generator(rng))


class FixedPoint(NamedTuple):
    x_hat: np.ndarray
    residual: float
    iterations: int


def _fixed_point_of(update: UpdateMap, tol: float, max_iterations: int) -> FixedPoint:
    cfg = update.cfg
    if not cfg.step.is_constant:
        raise DomainError("fixed points exist only for constant step sizes", "step", cfg.step.kind.value)

    ens = update.ens
    mixing = update.mixing
    contraction_factor(
        cfg.variant,
        cfg.step.eta,
        ens.mu,
        ens.L,
        mixing.lambda2,
        mixing.lambdaN,
        cfg.T,
    ).require_valid()

    noise_free = update.noise_free()
    rng = np.random.default_rng(0)
    X = np.zeros((ens.n_agents, ens.dim))
    residual = np.inf
    for k in range(1, max_iterations + 1):
        X_next = noise_free.apply(X, 0, rng)
        residual = float(np.linalg.norm(X_next - X))
        X = X_next
        if residual <= tol:
            logger.debug(f"Fixed point of {cfg.variant.value} reached after {k} iterations")
            return FixedPoint(x_hat=X, residual=residual, iterations=k)

    raise ConvergenceError(
        f"fixed-point iteration did not reach tol={tol} in {max_iterations} iterations",
        iterations=max_iterations,
        residual=residual,
    )


@log_performance
def fixed_point(
    cfg: AlgorithmConfig,
    topo: Topology,
    ens: ObjectiveEnsemble,
    tol: Optional[float] = None,
    *,
    noise: Optional[NoiseConfig] = None,
    settings: Optional[Settings] = None
) -> FixedPoint:
    """Fixed point of the noise-free map, found by iterating from X = 0.

    Raises StepSizeError outside the contraction regime. With link failures the
    mean mixing matrix E[Q] defines the map.
    """

    settings = settings or get_settings()
    tol = settings.fixed_point_tol if tol is None else validate_positive(tol, "tol")
    return _fixed_point_of(UpdateMap(cfg, topo, ens, noise), tol, settings.max_iterations)


@dataclass(frozen=True)
class Reference:
    """Targets the trace metrics are measured against."""
    X_fixed: Optional[np.ndarray]
    X_star: np.ndarray


def reference_for(update: UpdateMap, settings: Settings) -> Reference:
    X_star = update.ens.optimum.X_star
    if not update.cfg.step.is_constant:
        return Reference(X_fixed=X_star, X_star=X_star)
    try:
        fp = _fixed_point_of(update, settings.fixed_point_tol, settings.max_iterations)
    except StepSizeError as e:
        logger.info(f"No fixed point for this configuration: {e.message}")
        return Reference(X_fixed=None, X_star=X_star)
    return Reference(X_fixed=fp.x_hat, X_star=X_star)


def _distance(X: np.ndarray, target: Optional[np.ndarray]) -> float:
    if target is None:
        return float("nan")
    return float(np.linalg.norm(X - target))


def _run(
    update: UpdateMap,
    X0: np.ndarray,
    n_iters: int,
    rng: np.random.Generator,
    reference: Reference,
    guard: float,
    seed: Optional[int],
    store_iterates: bool
) -> Trace:
    X = X0
    iterates: List[np.ndarray] = [X]
    fixed = [_distance(X, reference.X_fixed)]
    opt = [_distance(X, reference.X_star)]
    cons = [consensus_residual(X)]
    diverged_at = None

    for t in range(n_iters):
        X = update.apply(X, t, rng)
        if not np.all(np.isfinite(X)) or float(np.max(np.abs(X))) > guard:
            diverged_at = t + 1
            logger.debug(f"Divergence guard tripped at t={diverged_at}")
            break
        if store_iterates:
            iterates.append(X)
        else:
            iterates[-1] = X
        fixed.append(_distance(X, reference.X_fixed))
        opt.append(_distance(X, reference.X_star))
        cons.append(consensus_residual(X))

    return Trace(
        iterates=iterates,
        dist_to_fixed=np.asarray(fixed),
        dist_to_opt=np.asarray(opt),
        consensus_residual=np.asarray(cons),
        seed=seed,
        config=update.cfg.to_dict() | {"noise": update.noise.to_dict()},
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
    )


def run(
    X0: np.ndarray,
    n_iters: int,
    cfg: AlgorithmConfig,
    topo: Topology,
    ens: ObjectiveEnsemble,
    noise: Optional[NoiseConfig] = None,
    rng: RngLike = None,
    *,
    reference: Optional[Reference] = None,
    store_iterates: bool = True,
    settings: Optional[Settings] = None
) -> Trace:
    """Iterate the configured map n_iters times.

    ``rng`` may be a Generator or an integer seed. dist_to_fixed is NaN when the
    step size admits no fixed point; time-varying schedules measure it against
    X*. With store_iterates=False only the latest iterate is kept.
    """

    if n_iters < 0:
        raise DomainError(f"n_iters must be nonnegative, got {n_iters}", "n_iters", n_iters)
    settings = settings or get_settings()
    seed = rng if isinstance(rng, int) else None
    update = UpdateMap(cfg, topo, ens, noise)
    if reference is None:
        reference = reference_for(update, settings)
    return _run(
        update,
        _initial(X0, ens),
        int(n_iters),
        _as_generator(rng),
        reference,
        settings.divergence_guard,
        seed,
        store_iterates,
    )


@dataclass
class MonteCarloResult:
    traces: List[Trace]
    rms_dist_to_fixed: np.ndarray
    rms_dist_to_opt: np.ndarray
    rms_consensus_residual: np.ndarray
    base_seed: int

    @property
    def paths(self) -> int:
        return len(self.traces)


def _rms(traces: List[Trace], metric: str) -> np.ndarray:
    length = min(len(getattr(tr, metric)) for tr in traces)
    stacked = np.vstack([getattr(tr, metric)[:length] for tr in traces])
    return np.sqrt(np.mean(stacked ** 2, axis=0))


@log_performance
def run_paths(
    X0: np.ndarray,
    n_iters: int,
    cfg: AlgorithmConfig,
    topo: Topology,
    ens: ObjectiveEnsemble,
    noise: Optional[NoiseConfig],
    base_seed: int,
    paths: int,
    *,
    threads: Optional[int] = None,
    reference: Optional[Reference] = None,
    settings: Optional[Settings] = None
) -> MonteCarloResult:
    """Independent paths with seeds base_seed + index, collected in path order."""

    if paths < 1:
        raise DomainError(f"paths must be at least 1, got {paths}", "paths", paths)
    settings = settings or get_settings()
    update = UpdateMap(cfg, topo, ens, noise)
    if reference is None:
        reference = reference_for(update, settings)
    X0 = _initial(X0, ens)

    def one_path(index: int) -> Trace:
        seed = int(base_seed) + index
        return _run(
            update,
            X0,
            int(n_iters),
            np.random.default_rng(seed),
            reference,
            settings.divergence_guard,
            seed,
            False,
        )

    workers = threads or settings.threads
    with ThreadPoolExecutor(max_workers=workers) as executor:
        traces = list(executor.map(one_path, range(paths)))

    logger.info(f"Completed {paths} Monte Carlo paths of {n_iters} iterations on {workers} threads")
    return MonteCarloResult(
        traces=traces,
        rms_dist_to_fixed=_rms(traces, "dist_to_fixed"),
        rms_dist_to_opt=_rms(traces, "dist_to_opt"),
        rms_consensus_residual=_rms(traces, "consensus_residual"),
        base_seed=int(base_seed),
    )
