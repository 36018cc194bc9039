"""
Scalar recursion whose noise breaks the c^2 + omega^2 < 1 condition.

x+ = c x + eps with zero-mean two-point noise eps = +/-(sigma + omega |x|). For
c = 1/2 and omega = sqrt(3)/2 the squared distance to the noise-free fixed
point 0 grows by at least sigma^2 per step in expectation.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from ..middleware import DomainError, log_performance, validate_positive

logger = logging.getLogger(__name__)


class CounterexampleResult(NamedTuple):
    mean_d2: np.ndarray
    stderr: np.ndarray
    paths: int


@log_performance
def nc3t_counterexample(
    n_iters: int,
    paths: int = 100_000,
    *,
    c: float = 0.5,
    omega: float = math.sqrt(3.0) / 2.0,
    sigma: float = 1.0,
    x0: float = 0.0,
    seed: int = 0
) -> CounterexampleResult:
    """Monte Carlo estimate of E[d_t^2] for t = 0..n_iters, vectorized over paths."""

    if n_iters < 0:
        raise DomainError(f"n_iters must be nonnegative, got {n_iters}", "n_iters", n_iters)
    if paths < 2:
        raise DomainError(f"need at least two paths, got {paths}", "paths", paths)
    validate_positive(c, "c", allow_zero=True)
    validate_positive(omega, "omega", allow_zero=True)
    validate_positive(sigma, "sigma", allow_zero=True)

    rng = np.random.default_rng(seed)
    x = np.full(paths, float(x0))
    mean = np.empty(n_iters + 1)
    stderr = np.empty(n_iters + 1)

    for t in range(n_iters + 1):
        d2 = x ** 2
        mean[t] = d2.mean()
        stderr[t] = d2.std(ddof=1) / math.sqrt(paths)
        if t == n_iters:
            break
        signs = rng.integers(0, 2, size=paths) * 2.0 - 1.0
        x = c * x + signs * (sigma + omega * np.abs(x))

    logger.debug(f"Counterexample: E[d^2] reached {mean[-1]:.4g} after {n_iters} steps")
    return CounterexampleResult(mean_d2=mean, stderr=stderr, paths=paths)
