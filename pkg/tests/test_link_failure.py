"""Random link failures: realized matrices, their mean and the noise bound."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degrad.middleware import DomainError, TopologyError
from degrad.topology import (
    LinkFailureModel,
    ProbabilityMode,
    Topology,
    ToyKind,
    build_toy,
    expected_Q,
    expected_topology,
    link_noise_variance_bound,
    sample_link_failure,
    validate,
)


@pytest.fixture
def ring5():
    return build_toy(ToyKind.RING, 5, 0.2)


class TestSampling:
    def test_unknown_mode_rows_sum_to_one(self, ring5, rng):
        model = LinkFailureModel.uniform(5, 0.6, ProbabilityMode.UNKNOWN)
        Q = sample_link_failure(ring5, model, rng, size=500)
        np.testing.assert_allclose(Q.sum(axis=-1), 1.0, atol=1e-14)

    def test_known_mode_rows_sum_to_one_on_average(self, ring5, rng):
        model = LinkFailureModel.uniform(5, 0.6, ProbabilityMode.KNOWN)
        draws = 20_000
        sums = sample_link_failure(ring5, model, rng, size=draws).sum(axis=-1)
        spread = sums.std(axis=0) / np.sqrt(draws)
        assert np.all(np.abs(sums.mean(axis=0) - 1.0) <= 4.0 * spread + 1e-12)

    def test_failed_links_carry_no_weight(self, ring5, rng):
        model = LinkFailureModel.uniform(5, 0.5, ProbabilityMode.UNKNOWN)
        Q = sample_link_failure(ring5, model, rng, size=200)
        off_support = ~ring5.support()
        np.fill_diagonal(off_support, False)
        assert np.all(Q[:, off_support] == 0.0)

    @pytest.mark.parametrize("mode", [ProbabilityMode.KNOWN, ProbabilityMode.UNKNOWN])
    def test_monte_carlo_mean_matches_expected_q(self, ring5, rng, mode):
        model = LinkFailureModel.uniform(5, 0.7, mode)
        draws = 20_000
        Q = sample_link_failure(ring5, model, rng, size=draws)
        stderr = Q.std(axis=0) / np.sqrt(draws)
        assert np.all(np.abs(Q.mean(axis=0) - expected_Q(ring5, model)) <= 4.0 * stderr + 1e-12)

    def test_bipartite_support_is_rejected(self, rng):
        ring6 = build_toy(ToyKind.RING, 6, 0.1)
        with pytest.raises(TopologyError):
            sample_link_failure(ring6, LinkFailureModel.uniform(6, 0.9), rng)

    def test_zero_probability_on_a_link_is_rejected(self, ring5, rng):
        probs = np.full((5, 5), 0.9)
        probs[0, 1] = probs[1, 0] = 0.0
        with pytest.raises(DomainError):
            sample_link_failure(ring5, LinkFailureModel(probs), rng)

    def test_probabilities_outside_unit_interval(self):
        with pytest.raises(DomainError):
            LinkFailureModel.uniform(3, 1.5)


class TestExpectedMatrix:
    def test_expected_topology_is_valid(self, ring5):
        model = LinkFailureModel.uniform(5, 0.8, ProbabilityMode.UNKNOWN)
        assert validate(expected_topology(ring5, model)).is_valid

    def test_all_links_reliable_recovers_w(self, ring5):
        np.testing.assert_allclose(expected_Q(ring5, LinkFailureModel.uniform(5, 1.0)), ring5.weights)

    @given(p=st.floats(min_value=0.2, max_value=1.0), delta=st.floats(min_value=0.0, max_value=0.15))
    @settings(max_examples=50, deadline=None)
    def test_less_reliable_link_adds_psd_increment(self, p, delta):
        ring5 = build_toy(ToyKind.RING, 5, 0.2)
        probs = np.full((5, 5), p)
        weaker = probs.copy()
        weaker[0, 1] = weaker[1, 0] = p - delta
        increment = expected_Q(ring5, LinkFailureModel(weaker)) - expected_Q(ring5, LinkFailureModel(probs))
        assert np.linalg.eigvalsh(increment).min() >= -1e-12


class TestNoiseBound:
    def test_coefficients(self, ring5):
        known = link_noise_variance_bound(ring5, LinkFailureModel.uniform(5, 0.8, ProbabilityMode.KNOWN))
        unknown = link_noise_variance_bound(ring5, LinkFailureModel.uniform(5, 0.8, ProbabilityMode.UNKNOWN))
        assert known.coefficient == pytest.approx(5 / 4)
        assert unknown.coefficient == pytest.approx(5 / 2)
        assert unknown.tighter_sum == pytest.approx(2.0 * known.tighter_sum)
        # ten directed links of weight 0.2, each with p(1 - p) = 0.16
        assert known.tighter_sum == pytest.approx(10 * 0.16 * 0.04)

    @pytest.mark.parametrize("mode", [ProbabilityMode.KNOWN, ProbabilityMode.UNKNOWN])
    def test_empirical_noise_below_bound(self, ring5, rng, mode):
        model = LinkFailureModel.uniform(5, 0.6, mode)
        x = rng.standard_normal(5)
        draws = 50_000
        deviation = (sample_link_failure(ring5, model, rng, size=draws) - expected_Q(ring5, model)) @ x
        second_moment = float(np.mean(np.sum(deviation ** 2, axis=-1)))
        bound = link_noise_variance_bound(ring5, model)
        assert second_moment <= 1.05 * bound.tighter_sum * float(x @ x)
        assert bound.tighter_sum <= bound.coefficient

    def test_complete_topology_accepts_failures(self, rng):
        topo = Topology.from_weights(np.full((4, 4), 0.25))
        Q = sample_link_failure(topo, LinkFailureModel.uniform(4, 0.5, ProbabilityMode.UNKNOWN), rng)
        assert Q.shape == (4, 4)
