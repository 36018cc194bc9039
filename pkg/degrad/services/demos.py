"""
Curated reproductions with fixed seeds. Each demo checks one closed-form
claim and reports pass/fail with the numbers behind it.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

import numpy as np
import structlog

from ..bounds import aux_distance_check, contraction_factor
from ..dynamics import (
    AlgorithmConfig,
    NoiseConfig,
    StepSchedule,
    nc3t_counterexample,
    run,
)
from ..middleware import UsageError
from ..objectives import make_linear_regression, make_quadratic, random_quadratic_ensemble
from ..topology import Topology, ToyKind, build_toy, complete_weights, single_agent
from ..variants import Variant

logger = structlog.get_logger(__name__)

TIGHTNESS_RTOL = 1e-10

# (eigen index, rho, eta) on the N=6 ring: u_1 and u_N against rho = mu and rho = L
DGD_TIGHTNESS_CASES = ((0, 1.0, 0.1), (0, 3.0, 0.1), (5, 1.0, 1.2), (5, 3.0, 0.45))


@dataclass
class DemoResult:
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"demo": self.name, "verdict": "pass" if self.passed else "fail", **self.details}


def _max_relative_error(measured: np.ndarray, expected: np.ndarray) -> float:
    scale = np.maximum(np.abs(expected), np.finfo(float).tiny)
    return float(np.max(np.abs(measured - expected) / scale))


def gd_tightness() -> DemoResult:
    """f = x1^2/2 + 3 x2^2/2: the GD error decays exactly at the predicted factor in both regimes."""

    mu, L, n_iters = 1.0, 3.0, 50
    ens = make_quadratic([np.diag([mu, L])], [[0.0, 0.0]])
    topo = single_agent()
    t = np.arange(n_iters + 1)
    cases = []
    for eta, x0, expected_factor in ((0.4, [[1.0, 0.0]], 1.0 - 0.4 * mu), (0.55, [[0.0, 1.0]], 0.55 * L - 1.0)):
        cfg = AlgorithmConfig(Variant.GD, StepSchedule.constant(eta))
        rate = contraction_factor(Variant.GD, eta, mu, L, 0.0, 1.0)
        trace = run(np.array(x0), n_iters, cfg, topo, ens, rng=0)
        error = _max_relative_error(trace.dist_to_opt, expected_factor ** t)
        cases.append(
            {
                "eta": eta,
                "regime": rate.regime.value,
                "factor": rate.factor,
                "expected_factor": expected_factor,
                "max_rel_error": error,
                "ok": error <= TIGHTNESS_RTOL and abs(rate.factor - expected_factor) <= 1e-15,
            }
        )
    return DemoResult("gd-tightness", all(c["ok"] for c in cases), {"cases": cases})


def dgd_tightness() -> DemoResult:
    """Ring N=6, eps=0.1, f_n = rho x^2/2: eigenvector starts decay as |lambda_n - eta rho|^t."""

    topo = build_toy(ToyKind.RING, 6, 0.1)
    values = topo.spectrum.eigenvalues
    vectors = topo.spectrum.eigenvectors
    n_iters = 50
    t = np.arange(n_iters + 1)
    cases = []
    for index, rho, eta in DGD_TIGHTNESS_CASES:
        ens = make_quadratic([rho] * 6, [[0.0]] * 6)
        cfg = AlgorithmConfig(Variant.DGD, StepSchedule.constant(eta))
        x0 = vectors[:, index][:, None]
        trace = run(x0, n_iters, cfg, topo, ens, rng=0)
        expected = abs(values[index] - eta * rho) ** t
        error = _max_relative_error(trace.dist_to_fixed, expected)
        cases.append(
            {
                "eigen_index": index + 1,
                "lambda": float(values[index]),
                "rho": rho,
                "eta": eta,
                "max_rel_error": error,
                "ok": error <= TIGHTNESS_RTOL,
            }
        )
    return DemoResult("dgd-tightness", all(c["ok"] for c in cases), {"cases": cases})


def bipartite_divergence() -> DemoResult:
    """W = [[0, 1], [1, 0]] has lambda_N = -1, so DGD leaves the contraction regime and diverges."""

    topo = Topology.from_weights([[0.0, 1.0], [1.0, 0.0]])
    ens = make_quadratic([1.0, 1.0], [[0.0], [0.0]])
    eta = 0.5
    rate = contraction_factor(Variant.DGD, eta, 1.0, 1.0, topo.lambda2, topo.lambdaN)
    cfg = AlgorithmConfig(Variant.DGD, StepSchedule.constant(eta))
    trace = run(np.array([[1.0], [-1.0]]), 2000, cfg, topo, ens, rng=0)
    details = {
        "lambdaN": topo.lambdaN,
        "valid": rate.valid,
        "violated": rate.violated,
        "diverged": trace.diverged,
        "diverged_at": trace.diverged_at,
    }
    return DemoResult("bipartite-divergence", (not rate.valid) and trace.diverged, details)


def nc3t_divergence() -> DemoResult:
    """c = 1/2, omega = sqrt(3)/2: E[d_t^2] grows at least linearly despite c < 1."""

    n_iters = 20
    result = nc3t_counterexample(n_iters, paths=100_000, seed=0)
    t = np.arange(n_iters + 1)
    margin = result.mean_d2 - (t - 4.0 * result.stderr)
    return DemoResult(
        "nc3t-counterexample",
        bool(np.all(margin >= 0.0)),
        {
            "paths": result.paths,
            "final_mean_d2": float(result.mean_d2[-1]),
            "min_margin": float(margin.min()),
        },
    )


def fedavg_equivalence() -> DemoResult:
    """Federated averaging equals ATC diffusion on the complete graph, path by path."""

    rng = np.random.default_rng(0)
    n = 4
    ens = random_quadratic_ensemble(n, 2, rng)
    complete = Topology.from_weights(complete_weights(n))
    noise = NoiseConfig.gradient(sigma=0.1)
    X0 = rng.standard_normal((n, 2))
    cases = []
    for T in (1, 2, 5):
        step = StepSchedule.constant(0.05)
        fed = run(X0, 30, AlgorithmConfig(Variant.FEDERATED, step, T), complete, ens, noise, rng=7)
        atc = run(X0, 30, AlgorithmConfig(Variant.DIFFUSION_ATC, step, T), complete, ens, noise, rng=7)
        identical = all(np.array_equal(a, b) for a, b in zip(fed.iterates, atc.iterates))
        cases.append({"T": T, "identical": identical})
    return DemoResult("fedavg-equivalence", all(c["identical"] for c in cases), {"cases": cases})


def linreg_variance() -> DemoResult:
    """Sampling one of (1, 1), (1, -1), (2, 0) gives noise variance 8/3 + 8 x^2."""

    ens = make_linear_regression([[((1.0,), 1.0), ((1.0,), -1.0), ((2.0,), 0.0)]])
    agent = ens.locals[0]
    rng = np.random.default_rng(0)
    draws = 1_000_000
    cases = []
    for x in (0.0, 1.0, -2.0):
        point = np.array([x])
        noise = agent.stochastic_gradient(point, rng, size=draws)[:, 0] - agent.gradient(point)[0]
        variance = float(noise.var())
        expected = 8.0 / 3.0 + 8.0 * x * x
        mean_tol = 4.0 * math.sqrt(variance / draws)
        cases.append(
            {
                "x": x,
                "variance": variance,
                "expected": expected,
                "mean": float(noise.mean()),
                "ok": abs(variance - expected) <= 0.05 * expected and abs(noise.mean()) <= mean_tol,
            }
        )
    return DemoResult("linreg-variance", all(c["ok"] for c in cases), {"cases": cases})


def aux_distance() -> DemoResult:
    """Random systems on a ring stay inside the distance bound for DGD and diffusion."""

    topo = build_toy(ToyKind.RING, 6, 0.1)
    cases = []
    for variant in (Variant.DGD, Variant.DIFFUSION_ATC):
        result = aux_distance_check(topo, 0.01, variant, 100, np.random.default_rng(0))
        cases.append(
            {
                "variant": variant.value,
                "worst_ratio": result.worst_ratio,
                "ok": result.worst_ratio <= 1.0 + 1e-9,
            }
        )
    return DemoResult("aux-distance", all(c["ok"] for c in cases), {"cases": cases})


DEMOS: Dict[str, Callable[[], DemoResult]] = {
    "gd-tightness": gd_tightness,
    "dgd-tightness": dgd_tightness,
    "bipartite-divergence": bipartite_divergence,
    "nc3t-counterexample": nc3t_divergence,
    "fedavg-equivalence": fedavg_equivalence,
    "linreg-variance": linreg_variance,
    "aux-distance": aux_distance,
}


def demo_names() -> List[str]:
    return list(DEMOS)


def run_demo(name: str) -> DemoResult:
    try:
        demo = DEMOS[name]
    except KeyError:
        raise UsageError(f"unknown demo '{name}'; choose from {', '.join(DEMOS)}", argument="name")
    result = demo()
    logger.info("Demo finished", demo=name, passed=result.passed)
    return result
