"""Shared fixtures for the degrad test suite."""

import json
from pathlib import Path

import numpy as np
import pytest

from degrad.config import Settings
from degrad.objectives import make_quadratic_centered, random_quadratic_ensemble
from degrad.topology import ToyKind, build_toy

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def settings():
    return Settings(threads=2, log_level="WARNING")


@pytest.fixture
def ring6():
    return build_toy(ToyKind.RING, 6, 0.1)


@pytest.fixture
def ring4():
    """Ring N=4 with epsilon=1/4: eigenvalues 1, 1/2, 1/2, 0."""
    return build_toy(ToyKind.RING, 4, 0.25)


@pytest.fixture
def hetero_ensemble():
    """Six heterogeneous quadratics in d=2 with mu=1, L=4."""
    return random_quadratic_ensemble(6, 2, np.random.default_rng(7))


@pytest.fixture
def scalar_ensemble4():
    """Four scalar quadratics with curvatures in [1, 2] and distinct minimizers."""
    return make_quadratic_centered([1.0, 2.0, 1.5, 1.0], [[-1.0], [0.0], [1.0], [2.0]])


@pytest.fixture
def config_dir():
    return CONFIG_DIR


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path."""

    def _write(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return _write
