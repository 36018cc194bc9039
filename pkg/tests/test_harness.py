"""Command line, experiment documents, artifacts and sweeps."""

import csv
import json

import numpy as np
import pytest

from degrad.main import main
from degrad.middleware import ConfigurationError, DomainError
from degrad.services import (
    SWEEP_COLUMNS,
    check_dominance,
    load_experiment,
    load_sweep,
    load_topology,
    run_demo,
)


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def _minimal_experiment(**overrides):
    payload = {
        "schema": "degrad/1",
        "seed": 0,
        "ensemble": {"kind": "quadratic", "agents": [{"curvature": 1.0, "linear": [0.0]}]},
        "algorithm": {"variant": "gd", "step": {"eta": 0.5}},
        "n_iters": 5,
    }
    payload.update(overrides)
    return payload


class TestDocuments:
    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_experiment(path)
        assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 1

    def test_missing_seed(self, write_json):
        payload = _minimal_experiment()
        del payload["seed"]
        with pytest.raises(ConfigurationError) as excinfo:
            load_experiment(write_json("no-seed.json", payload))
        assert excinfo.value.details["config_key"] == "seed"

    def test_wrong_schema_tag(self, write_json):
        with pytest.raises(ConfigurationError):
            load_experiment(write_json("old.json", _minimal_experiment(schema="degrad/0")))

    def test_network_variant_needs_topology(self, write_json):
        payload = _minimal_experiment(algorithm={"variant": "dgd", "step": {"eta": 0.1}})
        with pytest.raises(ConfigurationError):
            load_experiment(write_json("no-topology.json", payload))

    def test_seed_override(self, config_dir):
        assert load_experiment(config_dir / "gd-tightness.json", seed=5).seed == 5

    def test_shipped_configs_parse(self, config_dir):
        for path in sorted(config_dir.glob("*.json")):
            payload = _json(path)
            if "grid" in payload:
                load_sweep(path)
            elif "ensemble" in payload:
                load_experiment(path)
            else:
                load_topology(path, strict=False)


class TestRunCommand:
    def test_gd_tightness(self, config_dir, tmp_path):
        assert main(["run", "--config", str(config_dir / "gd-tightness.json"), "--out", str(tmp_path)]) == 0
        comparison = _json(tmp_path / "comparison.json")
        assert comparison["verdict"] == "pass"
        assert comparison["tightness"] == pytest.approx(1.0, abs=1e-10)
        bounds = _json(tmp_path / "bounds.json")
        assert bounds["c"] == pytest.approx(0.6)

        with (tmp_path / "trace.csv").open(encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 51
        assert float(rows[10]["dist_to_opt"]) == pytest.approx(0.6 ** 10, rel=1e-10)

    def test_dgd_tightness(self, config_dir, tmp_path):
        assert main(["run", "--config", str(config_dir / "dgd-tightness.json"), "--out", str(tmp_path)]) == 0
        assert _json(tmp_path / "comparison.json")["tightness"] == pytest.approx(1.0, abs=1e-9)

    def test_bipartite_graph_is_a_regime_error(self, config_dir, tmp_path):
        assert main(["run", "--config", str(config_dir / "bipartite-dgd.json"), "--out", str(tmp_path)]) == 3
        bounds = _json(tmp_path / "bounds.json")
        assert bounds["lambdaN"] == pytest.approx(-1.0)
        assert not bounds["valid"]
        assert _json(tmp_path / "comparison.json")["verdict"] == "regime_error"

    @pytest.mark.parametrize("name", ["dgd-tightness.json", "link-failure.json"])
    def test_reruns_are_byte_identical(self, config_dir, tmp_path, name):
        for label in ("first", "second"):
            assert main(["run", "--config", str(config_dir / name), "--out", str(tmp_path / label)]) == 0
        for artifact in ("trace.csv", "bounds.json", "comparison.json"):
            assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()

    def test_seed_changes_noisy_paths(self, config_dir, tmp_path):
        config = str(config_dir / "link-failure.json")
        assert main(["run", "--config", config, "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
        assert main(["run", "--config", config, "--out", str(tmp_path / "b"), "--seed", "6"]) == 0
        assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "b" / "trace.csv").read_bytes()

    def test_time_varying_run(self, config_dir, tmp_path):
        assert main(["run", "--config", str(config_dir / "time-varying.json"), "--out", str(tmp_path)]) == 0
        bounds = _json(tmp_path / "bounds.json")
        assert bounds["envelope_kind"] == "time_varying"
        assert bounds["decay_class"] == "1/t"


class TestSweepCommand:
    def test_eta_grid(self, config_dir, tmp_path):
        assert main(["sweep", "--config", str(config_dir / "sweep-eta.json"), "--out", str(tmp_path)]) == 0
        with (tmp_path / "sweep.csv").open(encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            assert reader.fieldnames == SWEEP_COLUMNS
            rows = list(reader)
        assert [float(row["eta"]) for row in rows] == [0.01, 0.02, 0.05, 0.1, 0.2, 0.5]
        assert rows[-1]["verdict"] == "regime_error"
        assert rows[-1]["empirical_gap"] == ""

        valid = [row for row in rows if row["verdict"] != "regime_error"]
        assert all(row["verdict"] == "pass" for row in valid)
        gaps = [float(row["empirical_gap"]) for row in valid]
        assert gaps == sorted(gaps)

    def test_topology_grid(self, config_dir, tmp_path):
        assert main(["sweep", "--config", str(config_dir / "sweep-topology.json"), "--out", str(tmp_path)]) == 0
        with (tmp_path / "sweep.csv").open(encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 8
        assert {row["topology_kind"] for row in rows} == {"complete", "star", "line", "ring"}

    def test_empty_axis_writes_header_only(self, config_dir, write_json, tmp_path):
        payload = _json(config_dir / "sweep-eta.json")
        payload["grid"] = {"eta": []}
        path = write_json("empty-sweep.json", payload)
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "sweep.csv").read_text(encoding="utf-8") == ",".join(SWEEP_COLUMNS) + "\n"

    def test_oversized_grid(self, config_dir, write_json, tmp_path):
        payload = _json(config_dir / "sweep-eta.json")
        payload["grid"] = {
            "eta": [0.001 * (k + 1) for k in range(1001)],
            "gamma": [0.001 * (k + 1) for k in range(1000)],
        }
        path = write_json("huge-sweep.json", payload)
        with pytest.raises(DomainError):
            load_sweep(path)
        assert main(["sweep", "--config", str(path), "--out", str(tmp_path / "out")]) == 1


class TestOtherCommands:
    def test_demo_prints_one_json_line(self, capsys):
        assert main(["demo", "gd-tightness"]) == 0
        line = capsys.readouterr().out.strip().splitlines()[-1]
        payload = json.loads(line)
        assert payload["demo"] == "gd-tightness"
        assert payload["verdict"] == "pass"

    def test_dgd_tightness_covers_both_curvatures_and_modes(self):
        result = run_demo("dgd-tightness")
        cases = result.details["cases"]
        assert {(c["eigen_index"], c["rho"]) for c in cases} == {(1, 1.0), (1, 3.0), (6, 1.0), (6, 3.0)}
        assert all(c["ok"] for c in cases)
        assert result.passed

    def test_unknown_demo(self):
        assert main(["demo", "no-such-demo"]) == 64

    def test_validate_topology(self, config_dir, capsys):
        assert main(["validate-topology", "--config", str(config_dir / "bipartite-weights.json")]) == 1
        report = json.loads(capsys.readouterr().out)
        assert report["is_bipartite"]
        assert not report["is_valid"]
        assert main(["validate-topology", "--config", str(config_dir / "ring6-topology.json")]) == 0

    def test_spectrum(self, config_dir, capsys):
        assert main(["spectrum", "--config", str(config_dir / "ring6-topology.json")]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["lambda2"] == pytest.approx(0.9)
        assert summary["Lambda_dgd"] == pytest.approx(10.0)
        assert summary["reconstruction_error"] <= 1e-10

    def test_edge_list_topology(self, write_json):
        topo = load_topology(write_json("edges.json", {"n": 3, "edges": [[0, 1], [1, 2]], "epsilon": 0.3}))
        np.testing.assert_allclose(topo.weights.sum(axis=1), 1.0)

    def test_schema_to_file(self, tmp_path):
        out = tmp_path / "schema" / "experiment.json"
        assert main(["schema", "--out", str(out)]) == 0
        assert "degrad/1" in out.read_text(encoding="utf-8")

    @pytest.mark.parametrize(
        "argv",
        [[], ["run"], ["run", "--config", "x.json", "--bogus"], ["frobnicate"], ["run", "--config", "x.json", "--seed", "-1"]],
    )
    def test_usage_errors(self, argv):
        assert main(argv) == 64


class TestDominanceCheck:
    def test_first_violation(self):
        check = check_dominance("d", np.array([1.0, 0.5, 0.3]), np.array([1.0, 0.6, 0.2]), 0.0)
        assert not check.holds
        assert check.first_violation == 2
        assert check.tightness == pytest.approx(1.5)

    def test_slack_and_absolute_tolerance(self):
        assert check_dominance("d", np.array([1.05]), np.array([1.0]), 0.1).holds
        assert check_dominance("d", np.array([1e-13]), np.array([0.0]), 0.0).holds
        assert check_dominance("d", np.array([0.0]), np.array([0.0]), 0.0).tightness is None
