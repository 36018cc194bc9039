"""Noisy iterations against their envelopes: gradient, communication and link noise."""

import numpy as np
import pytest

from degrad.dynamics import AlgorithmConfig, NoiseConfig, StepSchedule, run
from degrad.objectives import make_quadratic_centered
from degrad.services import ExperimentRunner, load_experiment
from degrad.variants import Variant


def _run_config(config_dir, name, settings, tmp_path, **update):
    config = load_experiment(config_dir / name).model_copy(update=update)
    return ExperimentRunner(settings).run(config, out_dir=tmp_path)


class TestGradientNoise:
    @pytest.mark.slow
    def test_rms_error_stays_under_envelope(self, config_dir, settings, tmp_path):
        outcome = _run_config(config_dir, "noisy-dgd.json", settings, tmp_path, mc_paths=1000)
        assert outcome.comparison.verdict == "pass"
        assert outcome.comparison.paths == 1000
        assert outcome.bounds.dhat > 0.0
        assert (tmp_path / "trace.csv").exists()

    def test_envelope_floor_shrinks_with_step(self, config_dir, settings, tmp_path):
        base = load_experiment(config_dir / "noisy-dgd.json")
        runner = ExperimentRunner(settings)
        floors = []
        for eta in (0.05, 0.01):
            algorithm = base.algorithm.model_copy(update={"step": base.algorithm.step.model_copy(update={"eta": eta})})
            config = base.model_copy(update={"algorithm": algorithm, "mc_paths": 20, "n_iters": 20})
            floors.append(runner.run(config, out_dir=tmp_path / str(eta)).bounds.dhat)
        assert floors[1] < floors[0]


class TestCommunicationNoise:
    def test_config_passes(self, config_dir, settings, tmp_path):
        outcome = _run_config(config_dir, "comm-noise.json", settings, tmp_path)
        assert outcome.comparison.verdict == "pass"
        assert any("effective mixing" in note for note in outcome.bounds.notes)

    @pytest.mark.slow
    def test_consensus_step_scaling(self, ring4, settings):
        """With gamma = eta^(3/4) the stationary RMS error scales like eta^(1/4)."""

        ens = make_quadratic_centered([5.0, 7.0, 8.0, 10.0], [[0.0]] * 4)
        noise = NoiseConfig.communication(sigma=1.0)
        X0 = np.zeros((4, 1))
        n_iters = 60_000
        levels = {}
        for eta in (1e-2, 1e-3, 1e-4):
            cfg = AlgorithmConfig(Variant.DIFFUSION_ATC, StepSchedule.constant(eta), consensus_gamma=eta ** 0.75)
            trace = run(X0, n_iters, cfg, ring4, ens, noise, rng=17, store_iterates=False, settings=settings)
            tail = trace.dist_to_opt[n_iters // 2:]
            levels[eta] = float(np.sqrt(np.mean(tail ** 2)))

        expected = 10.0 ** -0.25
        for coarse, fine in ((1e-2, 1e-3), (1e-3, 1e-4)):
            ratio = levels[fine] / levels[coarse]
            assert expected / 3.0 <= ratio <= expected * 3.0


class TestLinkFailures:
    def test_config_runs(self, config_dir, settings, tmp_path):
        outcome = _run_config(config_dir, "link-failure.json", settings, tmp_path, mc_paths=50)
        assert outcome.comparison.verdict == "pass"
        assert not outcome.trace.diverged
        assert any("tighter_sum" in note for note in outcome.bounds.notes)
