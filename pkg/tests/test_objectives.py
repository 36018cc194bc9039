"""Local objectives, ensembles, optima and heterogeneity."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degrad.middleware import CapabilityError, DomainError, ValidationError
from degrad.objectives import (
    LinearRegressionObjective,
    LogisticRidgeObjective,
    QuadraticObjective,
    ensemble_from_dict,
    finite_difference_gradient,
    first_order_checks,
    make_linear_regression,
    make_logistic,
    make_quadratic,
    make_quadratic_centered,
    random_quadratic_ensemble,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)

# (1, 1), (1, -1), (2, 0): f(x) = 2 x^2 + 2/3 after averaging the squared residuals
THREE_POINTS = [((1.0,), 1.0), ((1.0,), -1.0), ((2.0,), 0.0)]


def _logistic_rows(rng, m=20, d=3):
    features = rng.standard_normal((m, d))
    labels = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return np.column_stack([features, labels])


class TestQuadratic:
    def test_constants_from_curvature_spectrum(self):
        f = QuadraticObjective(np.diag([1.0, 3.0]), [0.0, 0.0])
        assert (f.mu, f.L) == pytest.approx((1.0, 3.0))
        np.testing.assert_allclose(f.gradient([1.0, 1.0]), [1.0, 3.0])

    def test_centered_minimizer(self):
        f = QuadraticObjective.centered(2.0, [1.0, -1.0])
        np.testing.assert_allclose(f.minimizer(), [1.0, -1.0])
        assert f.value([1.0, -1.0]) == pytest.approx(0.0, abs=1e-14)

    def test_asymmetric_curvature_is_rejected(self):
        with pytest.raises(ValidationError):
            QuadraticObjective([[1.0, 0.5], [0.0, 1.0]], [0.0, 0.0])

    def test_indefinite_curvature_is_rejected(self):
        with pytest.raises(DomainError):
            QuadraticObjective(np.diag([1.0, -1.0]), [0.0, 0.0])


class TestLinearRegression:
    """The three-point instance: f'(x) = 4x and sampling variance 8/3 + 8x^2."""

    def test_three_point_gradient(self):
        agent = make_linear_regression([THREE_POINTS]).locals[0]
        assert (agent.mu, agent.L) == pytest.approx((4.0, 4.0))
        for x in (-2.0, 0.0, 1.5):
            assert agent.gradient(np.array([x]))[0] == pytest.approx(4.0 * x)

    @pytest.mark.parametrize("x", [0.0, 1.0, -2.0])
    def test_sampling_variance(self, x):
        agent = make_linear_regression([THREE_POINTS]).locals[0]
        rng = np.random.default_rng(0)
        draws = 1_000_000
        point = np.array([x])
        noise = agent.stochastic_gradient(point, rng, size=draws)[:, 0] - agent.gradient(point)[0]
        expected = 8.0 / 3.0 + 8.0 * x * x
        assert noise.var() == pytest.approx(expected, rel=0.05)
        assert abs(noise.mean()) <= 4.0 * np.sqrt(noise.var() / draws)

    def test_rows_form_matches_pairs_form(self):
        rows = np.array([[1.0, 1.0], [1.0, -1.0], [2.0, 0.0]])
        from_rows = make_linear_regression([rows]).locals[0]
        from_pairs = make_linear_regression([THREE_POINTS]).locals[0]
        np.testing.assert_allclose(from_rows.H, from_pairs.H)
        np.testing.assert_allclose(from_rows.c, from_pairs.c)

    def test_singular_gram_needs_ridge(self):
        with pytest.raises(DomainError):
            LinearRegressionObjective([[1.0, 0.0], [2.0, 0.0]], [1.0, 2.0])

    def test_value_agrees_with_quadratic_form(self, rng):
        agent = LinearRegressionObjective(rng.standard_normal((8, 3)), rng.standard_normal(8), ridge=0.1)
        x = rng.standard_normal(3)
        quadratic = 0.5 * x @ agent.H @ x + agent.c @ x + agent.offset
        assert agent.value(x) == pytest.approx(quadratic)


class TestLogistic:
    def test_gradient_matches_finite_differences(self, rng):
        agent = LogisticRidgeObjective(*np.hsplit(_logistic_rows(rng), [3]), ridge=0.5)
        for _ in range(5):
            x = rng.standard_normal(3)
            np.testing.assert_allclose(
                agent.gradient(x), finite_difference_gradient(agent, x), rtol=1e-5, atol=1e-7
            )

    def test_labels_must_be_signs(self):
        with pytest.raises(ValidationError):
            LogisticRidgeObjective([[1.0], [2.0]], [0.0, 1.0], ridge=1.0)

    def test_optimum_by_gradient_descent(self, rng):
        ens = make_logistic([_logistic_rows(rng) for _ in range(3)], ridge=0.5)
        opt = ens.optimum
        assert np.linalg.norm(ens.global_gradient(opt.x_star)) <= 1e-10
        assert not ens.is_quadratic


class TestFirstOrderConditions:
    @given(seed=seeds)
    @settings(max_examples=50, deadline=None)
    def test_quadratic_pairs(self, seed):
        rng = np.random.default_rng(seed)
        f = random_quadratic_ensemble(1, 4, rng, mu=0.5, L=5.0).locals[0]
        x, y = rng.standard_normal((2, 4))
        assert first_order_checks(f, x, y) == (True, True)

    @given(seed=seeds)
    @settings(max_examples=30, deadline=None)
    def test_logistic_pairs(self, seed):
        rng = np.random.default_rng(seed)
        agent = make_logistic([_logistic_rows(rng)], ridge=0.3).locals[0]
        x, y = 3.0 * rng.standard_normal((2, 3))
        assert first_order_checks(agent, x, y) == (True, True)


class TestEnsemble:
    def test_optimum_is_mean_of_centers(self):
        ens = make_quadratic_centered([1.0] * 5, [[float(n)] for n in range(1, 6)])
        assert ens.optimum.x_star[0] == pytest.approx(3.0)
        np.testing.assert_allclose(ens.optimum.local_minimizers[:, 0], [1, 2, 3, 4, 5])

    def test_homogeneous_optimum_has_zero_gradient(self):
        ens = make_quadratic([2.0] * 4, [[0.0]] * 4)
        assert ens.optimum.grad_norm == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(ens.optimum.X_star, np.zeros((4, 1)))

    def test_stacked_gradient_sums_to_zero_at_optimum(self, hetero_ensemble):
        np.testing.assert_allclose(hetero_ensemble.optimum.grad_at_opt.sum(axis=0), 0.0, atol=1e-10)

    @given(seed=seeds, n_agents=st.integers(min_value=1, max_value=8), dim=st.integers(min_value=1, max_value=4))
    @settings(max_examples=60, deadline=None)
    def test_heterogeneity_sandwich(self, seed, n_agents, dim):
        ens = random_quadratic_ensemble(n_agents, dim, np.random.default_rng(seed))
        report = ens.heterogeneity()
        assert report.bounds_ok
        assert report.gap >= -1e-12

    def test_constants_collapse_conservatively(self):
        ens = make_quadratic([np.diag([1.0, 2.0]), np.diag([3.0, 5.0])], [[0.0, 0.0], [0.0, 0.0]])
        assert (ens.mu, ens.L) == pytest.approx((1.0, 5.0))
        assert ens.condition_number == pytest.approx(5.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            make_quadratic([1.0, 1.0], [[0.0], [0.0, 0.0]])

    def test_iterate_shape_is_checked(self, hetero_ensemble):
        with pytest.raises(DomainError):
            hetero_ensemble.grad_stack(np.zeros((5, 2)))

    def test_quadratics_have_no_sampler(self, hetero_ensemble, rng):
        with pytest.raises(CapabilityError):
            hetero_ensemble.sample_stochastic_grad(np.zeros((6, 2)), rng)

    def test_regression_sampler_is_unbiased_per_agent(self, rng):
        ens = make_linear_regression([THREE_POINTS, THREE_POINTS])
        X = np.array([[1.0], [-1.0]])
        deviations = np.vstack([ens.sample_stochastic_grad(X, rng)[1] for _ in range(20_000)])
        assert np.all(np.abs(deviations.reshape(-1, 2).mean(axis=0)) <= 0.1)

    def test_dict_round_trip(self, hetero_ensemble):
        restored = ensemble_from_dict(hetero_ensemble.to_dict())
        X = np.ones((6, 2))
        np.testing.assert_allclose(restored.grad_stack(X), hetero_ensemble.grad_stack(X))

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            ensemble_from_dict({"kind": "cubic", "agents": []})
