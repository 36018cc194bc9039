"""
Experiment runner: simulate one configuration, evaluate its bounds, compare
the two and write the artifacts (trace CSV, bounds JSON, comparison JSON).
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import structlog

from ..bounds import (
    BoundReport,
    EnvelopeKind,
    ErrorEnvelope,
    GapBound,
    MixingQuantities,
    TimeVaryingEnvelope,
    contraction_for,
    fixed_point_gap_bound,
    time_varying_envelope,
    topology_factor_of,
    total_error_envelope,
)
from ..config import Settings, get_settings
from ..dynamics import (
    NoiseKind,
    NoiseSource,
    Reference,
    Trace,
    UpdateMap,
    reference_for,
    run,
    run_paths,
)
from ..middleware import (
    DegradError,
    DivergenceConditionError,
    DominanceViolation,
    StepSizeError,
    log_performance,
)
from ..topology import link_noise_variance_bound
from .experiment import Experiment, ExperimentConfig, build_experiment

logger = structlog.get_logger(__name__)

DETERMINISTIC_SLACK = 1e-9
ABS_TOL = 1e-12


def _json_float(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass
class SeriesCheck:
    """Dominance of one empirical metric by its envelope."""
    metric: str
    empirical: np.ndarray
    envelope: np.ndarray
    slack: float
    holds: bool
    first_violation: Optional[int]
    tightness: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric,
            "slack": self.slack,
            "holds": self.holds,
            "first_violation": self.first_violation,
            "tightness": _json_float(self.tightness),
            "empirical": [_json_float(v) for v in self.empirical],
            "envelope": [_json_float(v) for v in self.envelope],
        }


def check_dominance(
    metric: str,
    empirical: np.ndarray,
    envelope: np.ndarray,
    slack: float,
    abs_tol: float = ABS_TOL
) -> SeriesCheck:
    """empirical[t] <= envelope[t] (1 + slack) at every shared t.

    An absolute tolerance scaled by the largest envelope value absorbs rounding
    once the envelope itself reaches machine precision.
    """

    n = min(len(empirical), len(envelope))
    emp = np.asarray(empirical[:n], dtype=float)
    env = np.asarray(envelope[:n], dtype=float)
    finite = env[np.isfinite(env)]
    scale = max(1.0, float(finite.max())) if finite.size else 1.0
    tol = abs_tol * scale

    ok = emp <= env * (1.0 + slack) + tol
    violations = np.flatnonzero(~ok)
    first = int(violations[0]) if violations.size else None

    measurable = env > tol
    tightness = float(np.max(emp[measurable] / env[measurable])) if np.any(measurable) else None
    return SeriesCheck(
        metric=metric,
        empirical=emp,
        envelope=env,
        slack=slack,
        holds=first is None,
        first_violation=first,
        tightness=tightness,
    )


@dataclass
class ComparisonReport:
    """Empirical metrics against their envelopes for one run.

    verdict is one of pass, fail, regime_error, no_envelope.
    """
    verdict: str
    checks: List[SeriesCheck] = field(default_factory=list)
    gap_check: Optional[Dict[str, Any]] = None
    paths: int = 1
    diverged: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def tightness(self) -> Optional[float]:
        return self.checks[0].tightness if self.checks else None

    def first_failure(self) -> Optional[SeriesCheck]:
        for check in self.checks:
            if not check.holds:
                return check
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "tightness": _json_float(self.tightness),
            "paths": self.paths,
            "diverged": self.diverged,
            "gap_check": self.gap_check,
            "checks": [check.to_dict() for check in self.checks],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class RunOutcome:
    experiment: Experiment
    bounds: BoundReport
    comparison: ComparisonReport
    trace: Trace
    artifacts: Dict[str, Path]


class ExperimentRunner:
    """Runs ExperimentConfigs end to end."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    # Bounds

    def _noise_radius(self, exp: Experiment, update: UpdateMap, reference: Reference) -> float:
        """Largest iterate norm the noise is evaluated at around the fixed point."""

        if reference.X_fixed is None:
            eta = exp.algorithm.step.eta0
            return float(np.linalg.norm(reference.X_star)) * (1.0 + eta * exp.algorithm.T * exp.ensemble.L)
        X_hat = reference.X_fixed
        return max([float(np.linalg.norm(X_hat))] + update.intermediate_norms(X_hat))

    def _constant_envelope(
        self,
        exp: Experiment,
        update: UpdateMap,
        reference: Reference,
        factor: float,
        gap: float,
        notes: List[str]
    ) -> Optional[ErrorEnvelope]:
        cfg = exp.algorithm
        noise = exp.noise
        X0 = exp.X0
        dist0_opt = float(np.linalg.norm(X0 - reference.X_star))
        dist0_fixed = None
        if reference.X_fixed is not None:
            dist0_fixed = float(np.linalg.norm(X0 - reference.X_fixed))
        common = dict(
            c=factor,
            eta=cfg.step.eta0,
            mu=exp.ensemble.mu,
            dist0_opt=dist0_opt,
            gap=gap,
            dist0_fixed=dist0_fixed,
            T=cfg.T,
            gamma=cfg.consensus_gamma,
        )

        if noise.kind is NoiseKind.NONE:
            return total_error_envelope(EnvelopeKind.NOISE_FREE, **common)

        if noise.kind is NoiseKind.GRADIENT_SAMPLING and noise.source is NoiseSource.ENSEMBLE:
            notes.append("ensemble sampler noise has no declared (sigma, omega); envelope skipped")
            return None

        M = self._noise_radius(exp, update, reference)
        if noise.kind is NoiseKind.LINK_FAILURE:
            bound = link_noise_variance_bound(exp.topology, noise.link_model)
            notes.append(f"link-failure noise: tighter_sum={bound.tighter_sum:.6g}")
            return total_error_envelope(
                EnvelopeKind.RANDOM_TOPOLOGY, omega=math.sqrt(bound.tighter_sum), M=M, **common
            )
        kind = (
            EnvelopeKind.GRADIENT_NOISE
            if noise.kind is NoiseKind.GRADIENT_SAMPLING
            else EnvelopeKind.COMM_NOISE
        )
        return total_error_envelope(kind, sigma=noise.sigma, omega=noise.omega, M=M, **common)

    def bounds(
        self,
        exp: Experiment,
        update: UpdateMap,
        reference: Reference
    ) -> Tuple[BoundReport, Optional[DegradError]]:
        """Theoretical quantities of the configuration and the regime error, if any."""

        cfg = exp.algorithm
        ens = exp.ensemble
        eta0 = cfg.step.eta0
        mixing = MixingQuantities.from_topology(update.mixing)
        contraction = contraction_for(cfg.variant, eta0, ens.mu, ens.L, mixing, cfg.T)
        notes: List[str] = []
        if cfg.consensus_gamma != 1.0 or cfg.consensus_rounds or exp.noise.kind is NoiseKind.LINK_FAILURE:
            notes.append("bounds use the effective mixing matrix (gamma, rounds or E[Q] applied)")

        if not contraction.valid:
            error = StepSizeError(
                f"update map is not a contraction: {contraction.violated}",
                inequality=contraction.violated,
                values={
                    "eta": eta0,
                    "eta_max": contraction.eta_max,
                    "lambda2": mixing.lambda2,
                    "lambdaN": mixing.lambdaN,
                },
            )
            notes.append(error.message)
            return BoundReport(contraction, None, None, notes, mixing), error

        gap: Optional[GapBound] = None
        try:
            gap = fixed_point_gap_bound(
                cfg.variant, eta0, cfg.T, ens.mu, ens.L, mixing, ens.optimum.grad_norm
            )
            notes.extend(gap.notes)
        except StepSizeError as e:
            notes.append(f"no gap bound: {e.message}")

        try:
            if cfg.step.is_constant:
                if gap is not None:
                    gap_value = gap.with_slack
                elif reference.X_fixed is not None:
                    gap_value = float(np.linalg.norm(reference.X_fixed - reference.X_star))
                    notes.append("envelope around x* uses the measured fixed-point gap")
                else:
                    gap_value = 0.0
                envelope = self._constant_envelope(
                    exp, update, reference, contraction.factor, gap_value, notes
                )
            elif exp.noise.is_noisy:
                notes.append("time-varying envelopes cover the noise-free iteration only")
                envelope = None
            else:
                envelope = time_varying_envelope(
                    eta0,
                    cfg.step.tau,
                    ens.mu,
                    ens.L,
                    topology_factor_of(cfg.variant, mixing),
                    ens.optimum.grad_norm,
                    float(np.linalg.norm(exp.X0 - reference.X_star)),
                    eta_lower=contraction.eta_lower,
                )
        except (StepSizeError, DivergenceConditionError) as e:
            notes.append(e.message)
            return BoundReport(contraction, gap, None, notes, mixing), e

        if isinstance(envelope, ErrorEnvelope):
            notes.extend(envelope.notes)
        return BoundReport(contraction, gap, envelope, notes, mixing), None

    # Simulation

    def simulate(self, exp: Experiment, reference: Reference) -> Tuple[Trace, int]:
        config = exp.config
        if not exp.noise.is_noisy:
            trace = run(
                exp.X0,
                config.n_iters,
                exp.algorithm,
                exp.topology,
                exp.ensemble,
                exp.noise,
                rng=exp.seed,
                reference=reference,
                store_iterates=config.output.iterates_json is not None,
                settings=self.settings,
            )
            return trace, 1

        mc = run_paths(
            exp.X0,
            config.n_iters,
            exp.algorithm,
            exp.topology,
            exp.ensemble,
            exp.noise,
            exp.seed,
            config.mc_paths,
            reference=reference,
            settings=self.settings,
        )
        diverged = [tr.diverged_at for tr in mc.traces if tr.diverged]
        trace = Trace(
            iterates=[mc.traces[0].final],
            dist_to_fixed=mc.rms_dist_to_fixed,
            dist_to_opt=mc.rms_dist_to_opt,
            consensus_residual=mc.rms_consensus_residual,
            seed=mc.base_seed,
            config=mc.traces[0].config,
            diverged=bool(diverged),
            diverged_at=min(diverged) if diverged else None,
        )
        return trace, mc.paths

    # Comparison

    def compare(
        self,
        report: BoundReport,
        trace: Trace,
        reference: Reference,
        paths: int,
        regime_error: Optional[DegradError]
    ) -> ComparisonReport:
        comparison = ComparisonReport(verdict="pass", paths=paths, diverged=trace.diverged)
        if trace.diverged:
            comparison.notes.append(f"divergence guard tripped at t={trace.diverged_at}")
        if regime_error is not None:
            comparison.verdict = "regime_error"
            comparison.notes.append(regime_error.message)
            return comparison

        n_iters = len(trace) - 1
        envelope = report.envelope
        if envelope is None:
            comparison.verdict = "no_envelope"
            return comparison

        slack = DETERMINISTIC_SLACK if paths == 1 else 3.0 / math.sqrt(paths)
        if isinstance(envelope, TimeVaryingEnvelope):
            comparison.checks.append(
                check_dominance("dist_to_opt", trace.dist_to_opt, envelope.sample(n_iters), slack)
            )
        else:
            comparison.checks.append(
                check_dominance(
                    "dist_to_fixed", trace.dist_to_fixed, envelope.to_fixed.sample(n_iters), slack
                )
            )
            comparison.checks.append(
                check_dominance("dist_to_opt", trace.dist_to_opt, envelope.to_opt.sample(n_iters), slack)
            )

        if report.gap is not None and reference.X_fixed is not None and report.contraction.valid:
            measured = float(np.linalg.norm(reference.X_fixed - reference.X_star))
            bound = report.gap.with_slack
            comparison.gap_check = {
                "empirical": measured,
                "bound": bound,
                "holds": measured <= bound * (1.0 + DETERMINISTIC_SLACK) + ABS_TOL,
            }

        gap_ok = comparison.gap_check is None or comparison.gap_check["holds"]
        if not all(check.holds for check in comparison.checks) or not gap_ok or trace.diverged:
            comparison.verdict = "fail"
        return comparison

    # Artifacts

    def write_artifacts(
        self,
        exp: Experiment,
        report: BoundReport,
        comparison: ComparisonReport,
        trace: Trace,
        out_dir: Optional[Union[str, Path]] = None
    ) -> Dict[str, Path]:
        output = exp.config.output
        root = Path(out_dir) if out_dir is not None else Path(output.dir)
        root.mkdir(parents=True, exist_ok=True)

        envelope = None
        if isinstance(report.envelope, ErrorEnvelope):
            envelope = report.envelope.to_fixed.sample(len(trace) - 1)
        elif isinstance(report.envelope, TimeVaryingEnvelope):
            envelope = report.envelope.sample(len(trace) - 1)

        artifacts = {
            "trace": trace.write_csv(root / output.trace_csv, envelope),
            "bounds": root / output.bounds_json,
            "comparison": root / output.comparison_json,
        }
        artifacts["bounds"].write_text(report.to_json() + "\n", encoding="utf-8")
        artifacts["comparison"].write_text(comparison.to_json() + "\n", encoding="utf-8")
        if output.iterates_json is not None:
            artifacts["iterates"] = root / output.iterates_json
            artifacts["iterates"].write_text(trace.iterates_json() + "\n", encoding="utf-8")
        return artifacts

    @log_performance
    def run(self, config: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None) -> RunOutcome:
        """Simulate, bound, compare and write artifacts.

        Artifacts are written before any verdict is raised: StepSizeError (or
        DivergenceConditionError) for regime violations, DominanceViolation when
        an envelope fails.
        """

        exp = build_experiment(config)
        update = UpdateMap(exp.algorithm, exp.topology, exp.ensemble, exp.noise)
        reference = reference_for(update, self.settings)

        report, regime_error = self.bounds(exp, update, reference)
        trace, paths = self.simulate(exp, reference)
        comparison = self.compare(report, trace, reference, paths, regime_error)
        artifacts = self.write_artifacts(exp, report, comparison, trace, out_dir)

        logger.info(
            "Experiment finished",
            name=config.name,
            seed=config.seed,
            variant=exp.algorithm.variant.value,
            verdict=comparison.verdict,
            tightness=comparison.tightness,
            paths=paths,
        )

        if regime_error is not None:
            raise regime_error
        if comparison.verdict == "fail":
            failure = comparison.first_failure()
            if failure is not None:
                t = failure.first_violation
                raise DominanceViolation(
                    f"{failure.metric} exceeds its envelope at t={t}",
                    t=t,
                    empirical=float(failure.empirical[t]),
                    envelope=float(failure.envelope[t]),
                )
            if comparison.gap_check is not None and not comparison.gap_check["holds"]:
                raise DominanceViolation(
                    "fixed-point gap exceeds its bound",
                    empirical=comparison.gap_check["empirical"],
                    envelope=comparison.gap_check["bound"],
                )
            raise DominanceViolation(f"trajectory diverged at t={trace.diverged_at}", t=trace.diverged_at)

        return RunOutcome(exp, report, comparison, trace, artifacts)
