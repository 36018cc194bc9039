"""
Mean Hessian kernels.

For a mu-strongly convex, L-smooth f and two points x != y there is a symmetric
matrix A with mu I <= A <= L I and A (y - x) = grad f(y) - grad f(x). This module
builds the canonical projector-form A.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..middleware import CertificationError, DomainError
from .functions import LocalObjective

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-12
CERTIFICATE_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MhtKernel:
    a: np.ndarray
    b: np.ndarray
    alpha: float
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def action_error(self) -> float:
        return float(np.linalg.norm(self.matrix @ self.a - self.b))


def mht_kernel(f: LocalObjective, x: np.ndarray, y: np.ndarray) -> MhtKernel:
    """Symmetric A with spectrum in [mu, L] mapping y - x onto the gradient difference."""

    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    a = y - x
    norm_a = float(np.linalg.norm(a))
    if norm_a == 0.0:
        raise DomainError("kernel needs two distinct points", "y", y)

    b = np.atleast_1d(f.gradient(y) - f.gradient(x))
    norm_b = float(np.linalg.norm(b))
    mu, L = f.mu, f.L

    if norm_b < mu * norm_a * (1.0 - CERTIFICATE_SLACK) or norm_b > L * norm_a * (1.0 + CERTIFICATE_SLACK):
        raise CertificationError(
            f"||b||/||a|| = {norm_b / norm_a:.6g} lies outside [mu, L] = [{mu:.6g}, {L:.6g}]",
            ratio=norm_b / norm_a,
            mu=mu,
            L=L,
        )

    m = a.size
    along = float(b @ a) / (norm_a ** 2)
    if np.linalg.norm(b - along * a) <= PARALLEL_TOL * norm_b:
        scale = norm_b / norm_a
        return MhtKernel(a=a, b=b, alpha=1.0 / scale, matrix=scale * np.eye(m))

    # A = mu I + u u^T / (u^T a) with u = b - mu a: the projector form
    # mu P_perp + (1/alpha) P_u written so that A a = b holds to rounding.
    u = b - mu * a
    ua = float(u @ a)
    uu = float(u @ u)
    if ua <= 0.0:
        raise CertificationError(
            "gradient difference violates strong convexity along y - x",
            ratio=norm_b / norm_a,
            mu=mu,
            L=L,
        )
    alpha = ua / (uu + mu * ua)
    matrix = mu * np.eye(m) + np.outer(u, u) / ua
    matrix = 0.5 * (matrix + matrix.T)

    top = mu + uu / ua
    if top > L * (1.0 + CERTIFICATE_SLACK) + CERTIFICATE_SLACK:
        raise CertificationError(
            f"kernel eigenvalue {top:.6g} exceeds L={L:.6g}", ratio=top, mu=mu, L=L
        )
    logger.debug(f"MHT kernel built in dimension {m} with alpha={alpha:.6g}")
    return MhtKernel(a=a, b=b, alpha=alpha, matrix=matrix)
