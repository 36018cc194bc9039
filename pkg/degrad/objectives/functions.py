"""
Local objectives f_n: R^d -> R with certified strong convexity and smoothness.

Every objective carries exact constants (mu, L) derived from its curvature, so
the bounds evaluated downstream use true values rather than estimates.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg
from scipy.special import expit

from ..middleware import (
    CapabilityError,
    ConvergenceError,
    DomainError,
    ValidationError,
    validate_positive,
    validate_symmetric,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 10_000_000


class LocalObjective(ABC):
    """A mu-strongly convex, L-smooth function of one agent."""

    kind: str = "abstract"

    def __init__(self, dim: int, mu: float, L: float):
        if dim < 1:
            raise DomainError(f"dimension must be positive, got {dim}", "dim", dim)
        if not (0.0 < mu <= L):
            raise DomainError(
                f"need 0 < mu <= L, got mu={mu}, L={L}", "mu", mu
            )
        self.dim = int(dim)
        self.mu = float(mu)
        self.L = float(L)

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        ...

    def hessian(self, x: np.ndarray) -> Optional[np.ndarray]:
        return None

    @property
    def has_hessian(self) -> bool:
        return False

    @property
    def has_sampler(self) -> bool:
        return False

    @property
    def is_quadratic(self) -> bool:
        return False

    def stochastic_gradient(
        self,
        x: np.ndarray,
        rng: np.random.Generator,
        size: Optional[int] = None
    ) -> np.ndarray:
        raise CapabilityError(
            f"{type(self).__name__} has no stochastic gradient sampler",
            capability="stochastic_gradient",
        )

    def minimizer(self, tol: float = 1e-10, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
        """Gradient descent at the optimal constant step 2/(L + mu)."""
        return gradient_descent(
            self.gradient, np.zeros(self.dim), self.mu, self.L, tol, max_iterations
        )

    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError


def gradient_descent(
    gradient,
    x0: np.ndarray,
    mu: float,
    L: float,
    tol: float,
    max_iterations: int = DEFAULT_MAX_ITERATIONS
) -> np.ndarray:
    """Iterate x <- x - 2/(L+mu) grad(x) until ||grad(x)|| <= tol."""

    eta = 2.0 / (L + mu)
    x = np.array(x0, dtype=float)
    for iteration in range(max_iterations):
        g = gradient(x)
        norm = float(np.linalg.norm(g))
        if norm <= tol:
            logger.debug(f"Gradient descent converged after {iteration} iterations")
            return x
        x = x - eta * g
    raise ConvergenceError(
        f"gradient descent did not reach tol={tol} in {max_iterations} iterations",
        iterations=max_iterations,
        residual=norm,
    )


def _spectrum_bounds(matrix: np.ndarray, name: str) -> tuple:
    eigenvalues = linalg.eigvalsh(matrix)
    lowest, highest = float(eigenvalues[0]), float(eigenvalues[-1])
    if lowest <= 1e-12 * max(1.0, abs(highest)):
        raise DomainError(
            f"{name} is not positive definite (smallest eigenvalue {lowest:.3e})",
            name,
            matrix,
        )
    return lowest, highest


class QuadraticObjective(LocalObjective):
    """f(x) = 1/2 x^T H x + c^T x + offset."""

    kind = "quadratic"

    def __init__(self, curvature: Any, linear: Any, offset: float = 0.0):
        linear = np.atleast_1d(np.asarray(linear, dtype=float)).ravel()
        curvature = np.asarray(curvature, dtype=float)
        if curvature.ndim == 0:
            curvature = float(curvature) * np.eye(linear.size)
        H = validate_symmetric(curvature, "curvature")
        if H.shape[0] != linear.size:
            raise ValidationError(
                f"curvature is {H.shape} but linear term has length {linear.size}",
                "linear_terms",
            )
        H = 0.5 * (H + H.T)
        mu, L = _spectrum_bounds(H, "curvature")
        super().__init__(linear.size, mu, L)
        self.H = H
        self.c = linear
        self.offset = float(offset)

    @classmethod
    def centered(cls, curvature: Any, center: Any) -> "QuadraticObjective":
        """1/2 (x - m)^T H (x - m), whose minimizer is m."""
        center = np.atleast_1d(np.asarray(center, dtype=float)).ravel()
        curvature = np.asarray(curvature, dtype=float)
        H = curvature * np.eye(center.size) if curvature.ndim == 0 else curvature
        return cls(H, -H @ center, 0.5 * float(center @ H @ center))

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.c @ x + self.offset)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.H @ np.asarray(x, dtype=float) + self.c

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self.H

    @property
    def has_hessian(self) -> bool:
        return True

    @property
    def is_quadratic(self) -> bool:
        return True

    def minimizer(self, tol: float = 1e-10, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
        return linalg.solve(self.H, -self.c, assume_a="pos")

    def to_dict(self) -> Dict[str, Any]:
        return {"curvature": self.H.tolist(), "linear": self.c.tolist(), "offset": self.offset}


class LinearRegressionObjective(QuadraticObjective):
    """Mean squared residual over a local dataset, plus ridge ||x||^2.

    The stochastic gradient samples one data point uniformly, which yields
    zero-mean noise whose variance grows with ||x||^2.
    """

    kind = "linreg"

    def __init__(self, features: Any, targets: Any, ridge: float = 0.0):
        A = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.atleast_1d(np.asarray(targets, dtype=float)).ravel()
        if A.shape[0] != y.size or y.size == 0:
            raise ValidationError(
                f"{A.shape[0]} feature rows but {y.size} targets", "data"
            )
        ridge = validate_positive(ridge, "ridge", allow_zero=True)
        m, d = A.shape
        H = 2.0 / m * (A.T @ A) + 2.0 * ridge * np.eye(d)
        try:
            super().__init__(H, -2.0 / m * (A.T @ y), float(np.mean(y ** 2)))
        except DomainError:
            raise DomainError(
                "regression Gram matrix is singular; a positive ridge is required",
                "ridge",
                ridge,
            )
        self.features = A
        self.targets = y
        self.ridge = ridge

    @property
    def n_samples(self) -> int:
        return self.targets.size

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        residual = self.features @ x - self.targets
        return float(np.mean(residual ** 2) + self.ridge * (x @ x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        residual = self.features @ x - self.targets
        return 2.0 / self.n_samples * (self.features.T @ residual) + 2.0 * self.ridge * x

    @property
    def has_sampler(self) -> bool:
        return True

    def stochastic_gradient(
        self,
        x: np.ndarray,
        rng: np.random.Generator,
        size: Optional[int] = None
    ) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        index = rng.integers(self.n_samples, size=size)
        rows = self.features[index]
        residual = rows @ x - self.targets[index]
        if size is None:
            return 2.0 * (rows * residual) + 2.0 * self.ridge * x
        return 2.0 * (rows * residual[:, None]) + 2.0 * self.ridge * x

    def to_dict(self) -> Dict[str, Any]:
        rows = np.column_stack([self.features, self.targets])
        return {"rows": rows.tolist()}


class LogisticRidgeObjective(LocalObjective):
    """Mean logistic loss over labels in {-1, +1} plus ridge/2 ||x||^2."""

    kind = "logistic"

    def __init__(self, features: Any, labels: Any, ridge: float):
        A = np.atleast_2d(np.asarray(features, dtype=float))
        y = np.atleast_1d(np.asarray(labels, dtype=float)).ravel()
        if A.shape[0] != y.size or y.size == 0:
            raise ValidationError(f"{A.shape[0]} feature rows but {y.size} labels", "data")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValidationError("logistic labels must be -1 or +1", "labels")
        ridge = validate_positive(ridge, "ridge")
        m, d = A.shape
        curvature_max = float(linalg.eigvalsh(A.T @ A)[-1]) / (4.0 * m)
        super().__init__(d, ridge, ridge + curvature_max)
        self.features = A
        self.labels = y
        self.ridge = ridge

    @property
    def n_samples(self) -> int:
        return self.labels.size

    def _margins(self, x: np.ndarray) -> np.ndarray:
        return self.labels * (self.features @ np.asarray(x, dtype=float))

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.mean(np.logaddexp(0.0, -self._margins(x))) + 0.5 * self.ridge * (x @ x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        weights = -self.labels * expit(-self._margins(x))
        return self.features.T @ weights / self.n_samples + self.ridge * x

    def hessian(self, x: np.ndarray) -> np.ndarray:
        z = self._margins(x)
        curvature = expit(z) * expit(-z)
        weighted = self.features * curvature[:, None]
        return self.features.T @ weighted / self.n_samples + self.ridge * np.eye(self.dim)

    @property
    def has_hessian(self) -> bool:
        return True

    @property
    def has_sampler(self) -> bool:
        return True

    def stochastic_gradient(
        self,
        x: np.ndarray,
        rng: np.random.Generator,
        size: Optional[int] = None
    ) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        index = rng.integers(self.n_samples, size=size)
        rows = self.features[index]
        labels = self.labels[index]
        weights = -labels * expit(-labels * (rows @ x))
        if size is None:
            return weights * rows + self.ridge * x
        return rows * weights[:, None] + self.ridge * x

    def to_dict(self) -> Dict[str, Any]:
        rows = np.column_stack([self.features, self.labels])
        return {"rows": rows.tolist()}


def finite_difference_gradient(f: LocalObjective, x: np.ndarray) -> np.ndarray:
    """Central differences with h = 1e-6 (1 + ||x||)."""

    x = np.asarray(x, dtype=float)
    h = 1e-6 * (1.0 + float(np.linalg.norm(x)))
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f.value(x + step) - f.value(x - step)) / (2.0 * h)
    return grad


def first_order_checks(f: LocalObjective, x: np.ndarray, y: np.ndarray, slack: float = 1e-9) -> tuple:
    """(strong convexity holds, smoothness holds) for one pair of points."""

    a = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    b = f.gradient(y) - f.gradient(x)
    aa = float(a @ a)
    strongly_convex = float(a @ b) >= f.mu * aa * (1.0 - slack)
    smooth = float(np.linalg.norm(b)) <= f.L * np.sqrt(aa) * (1.0 + slack)
    return strongly_convex, smooth
