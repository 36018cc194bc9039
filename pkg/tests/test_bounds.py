"""Closed-form bounds: contraction factors, gaps, envelopes and the distance lemma."""

import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from degrad.bounds import (
    BoundReport,
    EnvelopeKind,
    MixingQuantities,
    Regime,
    aux_distance_check,
    aux_distance_ratio,
    contraction_factor,
    contraction_for,
    decay_class,
    fixed_point_gap_bound,
    nc3t_dhat,
    nc3t_rate,
    random_curvature,
    time_varying_envelope,
    topology_factor_of,
    total_error_envelope,
)
from degrad.dynamics import AlgorithmConfig, StepSchedule, run
from degrad.middleware import DivergenceConditionError, DomainError, StepSizeError
from degrad.topology import Topology
from degrad.variants import Variant

unit = st.floats(min_value=0.0, max_value=0.99, allow_nan=False)


class TestContraction:
    def test_gd_lower_step(self):
        rate = contraction_factor(Variant.GD, 0.4, 1.0, 3.0, 1.0, 1.0)
        assert rate.regime is Regime.LOWER_STEP
        assert rate.factor == pytest.approx(0.6)
        assert rate.valid

    def test_gd_upper_step(self):
        rate = contraction_factor(Variant.GD, 0.55, 1.0, 3.0, 1.0, 1.0)
        assert rate.regime is Regime.UPPER_STEP
        assert rate.factor == pytest.approx(0.65)
        assert rate.eta_max == pytest.approx(2.0 / 3.0)

    def test_dgd_thresholds_follow_smallest_eigenvalue(self, ring6):
        mixing = MixingQuantities.from_topology(ring6)
        rate = contraction_for(Variant.DGD, 0.1, 1.0, 4.0, mixing)
        assert mixing.lambdaN == pytest.approx(0.6)
        assert rate.eta_lower == pytest.approx(1.6 / 5.0)
        assert rate.eta_max == pytest.approx(0.4)

    def test_dgd_past_eta_max_is_invalid(self, ring6):
        rate = contraction_for(Variant.DGD, 0.5, 1.0, 4.0, MixingQuantities.from_topology(ring6))
        assert not rate.valid
        assert "lambda_N" in rate.violated
        with pytest.raises(StepSizeError):
            rate.require_valid()

    def test_bipartite_graph_has_no_contracting_step(self):
        bipartite = Topology(np.array([[0.0, 1.0], [1.0, 0.0]]))
        rate = contraction_for(Variant.DGD, 1e-3, 1.0, 1.0, MixingQuantities.from_topology(bipartite))
        assert rate.eta_max == pytest.approx(0.0)
        assert not rate.valid

    def test_diffusion_uses_gradient_descent_thresholds(self, ring6):
        rate = contraction_for(Variant.DIFFUSION_ATC, 0.3, 1.0, 4.0, MixingQuantities.from_topology(ring6))
        assert rate.eta_lower == pytest.approx(0.4)
        assert rate.factor == pytest.approx(0.7)

    def test_local_updates_raise_to_power(self):
        rate = contraction_factor(Variant.GD, 0.1, 1.0, 3.0, 1.0, 1.0, T=3)
        assert rate.factor == pytest.approx(0.9)
        assert rate.per_iteration == pytest.approx(0.729)

    def test_consensus_step_scales_lambda_n(self):
        raw = contraction_factor(Variant.DGD, 0.1, 1.0, 4.0, 0.5, -0.5)
        lazy = contraction_factor(Variant.DGD, 0.1, 1.0, 4.0, 0.5, -0.5, gamma=0.5)
        assert raw.eta_max == pytest.approx(0.5 / 4.0)
        assert lazy.eta_max == pytest.approx(1.25 / 4.0)

    def test_mu_above_l(self):
        with pytest.raises(DomainError):
            contraction_factor(Variant.GD, 0.1, 3.0, 1.0, 1.0, 1.0)


class TestGap:
    def test_dgd_closed_form(self):
        mixing = MixingQuantities(0.5, 0.0, 1.0)
        bound = fixed_point_gap_bound(Variant.DGD, 0.05, 1, 1.0, 2.0, mixing, 3.0)
        assert bound.Lambda == pytest.approx(2.0)
        assert bound.value == pytest.approx(0.05 * 2.0 * 2.0 * 3.0)
        assert not bound.second_order
        assert bound.slack == 0.0

    def test_federated_single_step_has_no_gap(self):
        bound = fixed_point_gap_bound(Variant.FEDERATED, 0.1, 1, 1.0, 4.0, MixingQuantities(0.9, 0.6, 9.0), 5.0)
        assert bound.value == 0.0
        assert bound.Lambda == 0.0

    def test_cta_adds_one_gradient_step(self, ring6):
        mixing = MixingQuantities.from_topology(ring6)
        eta = 0.5 / (4.0 * topology_factor_of(Variant.DIFFUSION_ATC, mixing))
        atc = fixed_point_gap_bound(Variant.DIFFUSION_ATC, eta, 1, 1.0, 4.0, mixing, 2.0)
        cta = fixed_point_gap_bound(Variant.DIFFUSION_CTA, eta, 1, 1.0, 4.0, mixing, 2.0)
        assert cta.value - atc.value == pytest.approx(eta * 2.0)

    def test_diffusion_step_cap(self, ring6):
        mixing = MixingQuantities.from_topology(ring6)
        Lambda = topology_factor_of(Variant.DIFFUSION_ATC, mixing)
        eta = min(2.0 / (4.0 * Lambda), 0.3)
        assert eta * 4.0 * Lambda > 1.0
        with pytest.raises(StepSizeError):
            fixed_point_gap_bound(Variant.DIFFUSION_ATC, eta, 1, 1.0, 4.0, mixing, 1.0)

    def test_second_order_flag(self):
        mixing = MixingQuantities(0.5, 0.0, 1.0)
        flagged = fixed_point_gap_bound(Variant.DGD, 0.05, 2, 1.0, 4.0, mixing, 1.0)
        quiet = fixed_point_gap_bound(Variant.DGD, 0.005, 2, 1.0, 4.0, mixing, 1.0)
        assert flagged.second_order
        assert not quiet.second_order
        assert flagged.slack == pytest.approx(10.0 * 0.4 ** 2)

    def test_disconnected_mixing(self):
        with pytest.raises(StepSizeError):
            fixed_point_gap_bound(Variant.DGD, 0.1, 1, 1.0, 4.0, MixingQuantities(1.0, 0.5, math.inf), 1.0)

    def test_invalid_step_is_rejected_first(self):
        with pytest.raises(StepSizeError):
            fixed_point_gap_bound(Variant.GD, 1.0, 1, 1.0, 4.0, MixingQuantities(0.0, 0.0, 0.0), 1.0)


class TestNoisyContraction:
    @given(c=unit, omega=unit, sigma=st.floats(min_value=0.0, max_value=10.0), M=st.floats(min_value=0.0, max_value=10.0))
    @settings(max_examples=200, deadline=None)
    def test_dhat_is_the_stationary_radius(self, c, omega, sigma, M):
        """sqrt(1 - c^2) dhat = omega M + sigma + omega dhat."""

        assume(c * c + omega * omega < 0.98)
        dhat = nc3t_dhat(c, omega, sigma, M)
        lhs = (1.0 - c * c) * dhat * dhat
        rhs = (omega * M + sigma + omega * dhat) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)
        assert dhat == nc3t_dhat(c, omega, sigma, M, n=4)

    def test_divergent_noise(self):
        with pytest.raises(DivergenceConditionError):
            nc3t_dhat(0.8, 0.7, 1.0)

    def test_rate(self):
        assert nc3t_rate(0.6, 0.8) == pytest.approx(1.0)
        assert nc3t_rate(0.3, 0.4, n=2) == pytest.approx(0.25)


class TestEnvelopes:
    def test_noise_free(self):
        env = total_error_envelope(EnvelopeKind.NOISE_FREE, c=0.5, eta=0.1, mu=1.0, dist0_opt=2.0, gap=0.1, T=2)
        assert env.to_opt(0) == pytest.approx(2.2)
        assert env.to_opt(1) == pytest.approx(0.1 + 0.25 * 2.1)
        assert env.to_fixed.asymptote == 0.0
        np.testing.assert_allclose(env.to_opt.sample(3), 0.1 + 2.1 * 0.25 ** np.arange(4))

    def test_gradient_noise_scales_with_eta(self):
        env = total_error_envelope(
            EnvelopeKind.GRADIENT_NOISE, c=0.9, eta=0.1, mu=1.0, dist0_opt=1.0, gap=0.0, sigma=1.0, omega=0.5
        )
        assert env.dhat == pytest.approx(0.1 / (math.sqrt(0.19) - 0.05))
        assert env.nu == pytest.approx(math.sqrt(0.81 + 0.0025))

    def test_multiple_local_steps_switch_kind(self):
        env = total_error_envelope(
            EnvelopeKind.GRADIENT_NOISE, c=0.9, eta=0.1, mu=1.0, dist0_opt=1.0, gap=0.0, T=3, sigma=1.0
        )
        assert env.kind is EnvelopeKind.MULTI_T_GRADIENT_NOISE
        assert env.to_fixed.rate == pytest.approx(0.9 ** 3)

    def test_communication_noise_needs_small_consensus_step(self):
        ok = total_error_envelope(
            EnvelopeKind.COMM_NOISE, c=0.99, eta=0.01, mu=1.0, dist0_opt=1.0, gap=0.0, sigma=1.0, gamma=0.5
        )
        assert ok.dhat_simplified == pytest.approx(0.5 / 0.1)
        with pytest.raises(StepSizeError):
            total_error_envelope(
                EnvelopeKind.COMM_NOISE, c=0.999, eta=0.01, mu=1.0, dist0_opt=1.0, gap=0.0, sigma=1.0, gamma=0.5
            )

    def test_non_contracting_factor(self):
        with pytest.raises(StepSizeError):
            total_error_envelope(EnvelopeKind.NOISE_FREE, c=1.0, eta=0.1, mu=1.0, dist0_opt=1.0, gap=0.0)

    def test_noisy_factor_must_stay_below_one(self):
        with pytest.raises(StepSizeError):
            total_error_envelope(
                EnvelopeKind.RANDOM_TOPOLOGY, c=0.8, eta=0.1, mu=1.0, dist0_opt=1.0, gap=0.0, omega=0.7
            )


class TestTimeVarying:
    @pytest.mark.parametrize(
        ("tau", "expected"),
        [(math.inf, "geometric"), (20.0, "1/t"), (10.0, "log(t)/t"), (5.0, "t^-0.5")],
    )
    def test_decay_class(self, tau, expected):
        assert decay_class(0.1, 1.0, tau) == expected

    def test_preconditions(self):
        with pytest.raises(StepSizeError):
            time_varying_envelope(0.5, 20.0, 1.0, 2.0, 2.0, 1.0, 1.0, eta_lower=1.0 / 3.0)
        with pytest.raises(StepSizeError):
            time_varying_envelope(0.2, 20.0, 1.0, 2.0, 2.0, 1.0, 1.0)
        with pytest.raises(StepSizeError):
            time_varying_envelope(1.0, 20.0, 1.0, 1.0, 0.0, 1.0, 1.0)

    def test_constant_schedule_settles_on_the_gap(self):
        env = time_varying_envelope(0.1, math.inf, 1.0, 2.0, 2.0, 1.0, 0.0)
        assert env.decay == "geometric"
        values = env.sample(2000)
        assert values[-1] == pytest.approx(0.1 * 2.0 * 2.0 * 1.0, rel=1e-6)

    @pytest.mark.slow
    def test_inverse_time_dgd_on_ring(self, ring4, scalar_ensemble4, settings):
        """Envelope dominates the trace and the error decays like 1/t."""

        eta0, tau, n_iters = 0.1, 20.0, 100_000
        mixing = MixingQuantities.from_topology(ring4)
        ens = scalar_ensemble4
        cfg = AlgorithmConfig(Variant.DGD, StepSchedule.inverse_time(eta0, tau))
        X0 = np.zeros((4, 1))
        trace = run(X0, n_iters, cfg, ring4, ens, rng=0, store_iterates=False, settings=settings)

        envelope = time_varying_envelope(
            eta0,
            tau,
            ens.mu,
            ens.L,
            topology_factor_of(Variant.DGD, mixing),
            ens.optimum.grad_norm,
            float(np.linalg.norm(X0 - ens.optimum.X_star)),
            eta_lower=contraction_for(Variant.DGD, eta0, ens.mu, ens.L, mixing).eta_lower,
        )
        assert envelope.decay == "1/t"
        bound = envelope.sample(n_iters)
        assert np.all(trace.dist_to_opt <= bound * (1.0 + 1e-9) + 1e-12)

        t = np.arange(1_000, n_iters + 1)
        slope = np.polyfit(np.log(t), np.log(trace.dist_to_opt[t]), 1)[0]
        assert -1.3 <= slope <= -0.8


class TestDistanceLemma:
    @pytest.mark.parametrize("variant", [Variant.DGD, Variant.DIFFUSION_ATC])
    def test_random_systems(self, ring6, rng, variant):
        Lambda = topology_factor_of(variant, MixingQuantities.from_topology(ring6))
        eta = min(0.01, 0.5 / (4.0 * Lambda))
        result = aux_distance_check(ring6, eta, variant, 100, rng)
        assert result.worst_ratio <= 1.0 + 1e-9
        assert result.ratios.shape == (100,)

    def test_zero_vector(self, ring6, rng):
        A = random_curvature(6, 1.0, 4.0, rng)
        assert aux_distance_ratio(ring6, 0.01, Variant.DGD, A, np.zeros(6), 1.0, 4.0) == 0.0

    def test_random_curvature_spectrum(self, rng):
        eigenvalues = np.linalg.eigvalsh(random_curvature(5, 1.0, 4.0, rng))
        assert eigenvalues.min() >= 1.0 - 1e-12
        assert eigenvalues.max() <= 4.0 + 1e-12

    def test_diffusion_step_cap(self, ring6, rng):
        Lambda = topology_factor_of(Variant.DIFFUSION_ATC, MixingQuantities.from_topology(ring6))
        with pytest.raises(StepSizeError):
            aux_distance_check(ring6, 2.0 / (4.0 * Lambda), Variant.DIFFUSION_ATC, 5, rng)


class TestBoundReport:
    def test_json_payload(self, ring6):
        mixing = MixingQuantities.from_topology(ring6)
        contraction = contraction_for(Variant.DGD, 0.1, 1.0, 4.0, mixing)
        gap = fixed_point_gap_bound(Variant.DGD, 0.1, 1, 1.0, 4.0, mixing, 1.0)
        envelope = total_error_envelope(
            EnvelopeKind.NOISE_FREE, c=contraction.factor, eta=0.1, mu=1.0, dist0_opt=1.0, gap=gap.value
        )
        report = BoundReport(contraction, gap, envelope, notes=["ring"], mixing=mixing)
        payload = json.loads(report.to_json())
        assert payload["c"] == pytest.approx(0.9)
        assert payload["regime"] == "lower_step"
        assert payload["Lambda"] == pytest.approx(10.0)
        assert payload["envelope_kind"] == "noise_free"
        assert payload["lambdaN"] == pytest.approx(0.6)
        assert payload["notes"] == ["ring"]
        assert "violated" not in payload
        np.testing.assert_allclose(report.opt_envelope(5), envelope.to_opt.sample(5))

    def test_without_envelope(self):
        contraction = contraction_factor(Variant.GD, 1.0, 1.0, 3.0, 1.0, 1.0)
        report = BoundReport(contraction, None, None)
        payload = report.to_dict()
        assert payload["gap"] is None
        assert payload["Lambda"] is None
        assert "violated" in payload
        assert report.opt_envelope(10) is None
        assert report.dhat == 0.0
