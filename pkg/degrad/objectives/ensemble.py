"""
Objective ensembles: the N local objectives of a decentralized problem.

The stacked ("component-wise") objective is f(X) = sum_n f_n(X_n) over an N x d
iterate matrix, and the global objective is F(x) = (1/N) sum_n f_n(x).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..middleware import (
    CapabilityError,
    ConvergenceError,
    DomainError,
    ValidationError,
    log_performance,
)
from .functions import (
    DEFAULT_MAX_ITERATIONS,
    LinearRegressionObjective,
    LocalObjective,
    LogisticRidgeObjective,
    QuadraticObjective,
    gradient_descent,
)

logger = logging.getLogger(__name__)

HETEROGENEITY_SLACK = 1e-8


@dataclass(frozen=True, eq=False)
class OptimumReport:
    """Global minimizer x*, the stacked gradient there, and local minimizers."""
    x_star: np.ndarray
    grad_at_opt: np.ndarray
    local_minimizers: np.ndarray

    @property
    def X_star(self) -> np.ndarray:
        """x* replicated on every agent (N x d)."""
        return np.broadcast_to(self.x_star, self.grad_at_opt.shape).copy()

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad_at_opt))


@dataclass(frozen=True)
class HeterogeneityReport:
    grad_norm: float
    dist: float
    gap: float
    bounds_ok: bool


class ObjectiveEnsemble:
    """N local objectives sharing the dimension d.

    The ensemble constants collapse the local certificates conservatively:
    mu = min_n mu_n and L = max_n L_n.
    """

    def __init__(self, objectives: Sequence[LocalObjective]):
        objectives = tuple(objectives)
        if not objectives:
            raise ValidationError("an ensemble needs at least one objective", "locals")
        dims = {f.dim for f in objectives}
        if len(dims) != 1:
            raise ValidationError(f"local objectives disagree on dimension: {sorted(dims)}", "locals")
        self.locals: Tuple[LocalObjective, ...] = objectives
        self.n_agents = len(objectives)
        self.dim = objectives[0].dim
        self.mu = min(f.mu for f in objectives)
        self.L = max(f.L for f in objectives)

    @property
    def condition_number(self) -> float:
        return self.L / self.mu

    @property
    def is_quadratic(self) -> bool:
        return all(f.is_quadratic for f in self.locals)

    @property
    def has_sampler(self) -> bool:
        return all(f.has_sampler for f in self.locals)

    def _check_stack(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and self.dim == 1:
            X = X[:, None]
        if X.shape != (self.n_agents, self.dim):
            raise DomainError(
                f"iterate matrix has shape {X.shape}, expected {(self.n_agents, self.dim)}",
                "X",
                X,
            )
        return X

    def grad_stack(self, X: np.ndarray) -> np.ndarray:
        """Row n is grad f_n(X[n])."""
        X = self._check_stack(X)
        return np.vstack([f.gradient(x) for f, x in zip(self.locals, X)])

    def value(self, X: np.ndarray) -> float:
        X = self._check_stack(X)
        return float(sum(f.value(x) for f, x in zip(self.locals, X)))

    def global_value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.mean([f.value(x) for f in self.locals]))

    def global_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.mean([f.gradient(x) for f in self.locals], axis=0)

    def solve_optimum(self, tol: float = 1e-10, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> OptimumReport:
        if tol == self._default_tol and max_iterations == DEFAULT_MAX_ITERATIONS:
            return self.optimum
        return self._solve(tol, max_iterations)

    _default_tol = 1e-10

    @cached_property
    def optimum(self) -> OptimumReport:
        return self._solve(self._default_tol, DEFAULT_MAX_ITERATIONS)

    @log_performance
    def _solve(self, tol: float, max_iterations: int) -> OptimumReport:
        if self.is_quadratic:
            H = sum(f.H for f in self.locals)
            c = sum(f.c for f in self.locals)
            x_star = linalg.solve(H, -c, assume_a="pos")
        else:
            x_star = gradient_descent(
                self.global_gradient,
                np.zeros(self.dim),
                self.mu,
                self.L,
                tol,
                max_iterations,
            )
        residual = float(np.linalg.norm(self.global_gradient(x_star)))
        if residual > tol and not self.is_quadratic:
            raise ConvergenceError(
                f"optimum residual {residual:.3e} exceeds tol={tol}", residual=residual
            )

        local_minimizers = np.vstack([f.minimizer(tol, max_iterations) for f in self.locals])
        X_star = np.tile(x_star, (self.n_agents, 1))
        logger.info(
            f"Solved optimum for {self.n_agents} agents (d={self.dim}), "
            f"||grad F(x*)|| = {residual:.3e}"
        )
        return OptimumReport(
            x_star=x_star,
            grad_at_opt=self.grad_stack(X_star),
            local_minimizers=local_minimizers,
        )

    def heterogeneity(self) -> HeterogeneityReport:
        """||grad f(x*)||, ||X* - X*_loc|| and f(X*) - f(X*_loc) with their sandwich check."""

        opt = self.optimum
        grad_norm = opt.grad_norm
        dist = float(np.linalg.norm(opt.X_star - opt.local_minimizers))
        gap = self.value(opt.X_star) - self.value(opt.local_minimizers)

        slack = 1.0 + HETEROGENEITY_SLACK
        tiny = 1e-12
        distance_ok = (
            grad_norm / self.L <= dist * slack + tiny
            and dist <= grad_norm / self.mu * slack + tiny
        )
        gap_ok = (
            grad_norm ** 2 / (2.0 * self.L) <= gap * slack + tiny
            and gap <= grad_norm ** 2 / (2.0 * self.mu) * slack + tiny
        )
        return HeterogeneityReport(
            grad_norm=grad_norm,
            dist=dist,
            gap=float(gap),
            bounds_ok=bool(distance_ok and gap_ok),
        )

    def sample_stochastic_grad(self, X: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """One sampled gradient per agent, and its deviation from the exact gradient."""

        X = self._check_stack(X)
        missing = [i for i, f in enumerate(self.locals) if not f.has_sampler]
        if missing:
            raise CapabilityError(
                f"agents {missing} have no stochastic gradient sampler",
                capability="stochastic_gradient",
            )
        noisy = np.vstack([f.stochastic_gradient(x, rng) for f, x in zip(self.locals, X)])
        return noisy, noisy - self.grad_stack(X)

    def to_dict(self) -> Dict[str, Any]:
        kinds = {f.kind for f in self.locals}
        if len(kinds) != 1:
            raise ValidationError(f"mixed objective kinds cannot be serialized: {sorted(kinds)}", "kind")
        kind = kinds.pop()
        payload: Dict[str, Any] = {"kind": kind, "agents": [f.to_dict() for f in self.locals]}
        if kind in ("linreg", "logistic"):
            payload["ridge"] = self.locals[0].ridge
        return payload


def make_quadratic(
    curvatures: Sequence[Any],
    linear_terms: Sequence[Any],
    offsets: Optional[Sequence[float]] = None
) -> ObjectiveEnsemble:
    """Quadratic agents f_n(x) = 1/2 x^T H_n x + c_n^T x (+ offset)."""

    if len(curvatures) != len(linear_terms):
        raise ValidationError(
            f"{len(curvatures)} curvatures but {len(linear_terms)} linear terms", "linear_terms"
        )
    offsets = offsets if offsets is not None else [0.0] * len(curvatures)
    return ObjectiveEnsemble(
        [QuadraticObjective(H, c, o) for H, c, o in zip(curvatures, linear_terms, offsets)]
    )


def make_quadratic_centered(curvatures: Sequence[Any], centers: Sequence[Any]) -> ObjectiveEnsemble:
    """Quadratic agents 1/2 (x - m_n)^T H_n (x - m_n)."""

    return ObjectiveEnsemble(
        [QuadraticObjective.centered(H, m) for H, m in zip(curvatures, centers)]
    )


def _split_rows(rows: Any) -> Tuple[np.ndarray, np.ndarray]:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] < 2:
        raise ValidationError("data rows must be [feature..., target]", "rows", rows)
    return rows[:, :-1], rows[:, -1]


def make_linear_regression(agent_data: Sequence[Any], ridge: float = 0.0) -> ObjectiveEnsemble:
    """One regression agent per dataset.

    Each dataset is a sequence of (feature vector, target) pairs or a 2-D
    array of rows [feature..., target].
    """

    objectives: List[LocalObjective] = []
    for data in agent_data:
        if isinstance(data, np.ndarray):
            features, targets = _split_rows(data)
        else:
            pairs = list(data)
            features = np.array([np.atleast_1d(np.asarray(p[0], dtype=float)) for p in pairs])
            targets = np.array([float(p[1]) for p in pairs])
        objectives.append(LinearRegressionObjective(features, targets, ridge))
    return ObjectiveEnsemble(objectives)


def make_logistic(agent_rows: Sequence[Any], ridge: float) -> ObjectiveEnsemble:
    objectives = []
    for rows in agent_rows:
        features, labels = _split_rows(rows)
        objectives.append(LogisticRidgeObjective(features, labels, ridge))
    return ObjectiveEnsemble(objectives)


def ensemble_from_dict(payload: Dict[str, Any]) -> ObjectiveEnsemble:
    """Inverse of ObjectiveEnsemble.to_dict."""

    try:
        kind = payload["kind"]
        agents = payload["agents"]
    except KeyError as e:
        raise ValidationError(f"ensemble document is missing {e}", "ensemble")

    if kind == "quadratic":
        return make_quadratic(
            [a["curvature"] for a in agents],
            [a["linear"] for a in agents],
            [a.get("offset", 0.0) for a in agents],
        )
    if kind == "linreg":
        return make_linear_regression(
            [np.asarray(a["rows"], dtype=float) for a in agents], payload.get("ridge", 0.0)
        )
    if kind == "logistic":
        return make_logistic([a["rows"] for a in agents], payload.get("ridge", 0.0))
    raise ValidationError(f"unknown ensemble kind '{kind}'", "kind", kind)


def random_quadratic_ensemble(
    n_agents: int,
    dim: int,
    rng: np.random.Generator,
    mu: float = 1.0,
    L: float = 4.0,
    spread: float = 1.0
) -> ObjectiveEnsemble:
    """Heterogeneous quadratics with curvature spectra inside [mu, L].

    The extreme eigenvalues mu and L are both attained by some agent.
    """

    curvatures = []
    for n in range(n_agents):
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eigenvalues = rng.uniform(mu, L, size=dim)
        if n == 0:
            eigenvalues[0] = mu
        if n == n_agents - 1:
            eigenvalues[-1] = L
        H = (Q * eigenvalues) @ Q.T
        curvatures.append(0.5 * (H + H.T))
    centers = spread * rng.standard_normal((n_agents, dim))
    return make_quadratic_centered(curvatures, centers)


# Module-level forms of the ensemble operations


def grad_stack(e: ObjectiveEnsemble, X: np.ndarray) -> np.ndarray:
    return e.grad_stack(X)


def solve_optimum(e: ObjectiveEnsemble, tol: float = 1e-10) -> OptimumReport:
    return e.solve_optimum(tol)


def heterogeneity(e: ObjectiveEnsemble) -> HeterogeneityReport:
    return e.heterogeneity()


def sample_stochastic_grad(e: ObjectiveEnsemble, X: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    return e.sample_stochastic_grad(X, rng)
