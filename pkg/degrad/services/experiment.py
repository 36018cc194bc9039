"""
Experiment documents.

JSON configs are parsed into pydantic models and then built into the domain
objects (topology, ensemble, algorithm and noise configs, initial iterate).
Every document carries the versioned tag "schema": "degrad/1" and an explicit
seed.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as SchemaError

from ..dynamics import AlgorithmConfig, Distribution, NoiseConfig, NoiseKind, NoiseSource, StepSchedule
from ..middleware import ConfigurationError, DomainError
from ..objectives import ObjectiveEnsemble, ensemble_from_dict, random_quadratic_ensemble
from ..topology import (
    LinkFailureModel,
    ProbabilityMode,
    Topology,
    ToyKind,
    build_toy,
    from_edges,
    random_connected,
    single_agent,
)
from ..variants import Variant

logger = logging.getLogger(__name__)

SCHEMA_TAG = "degrad/1"
MAX_GRID_CELLS = 1_000_000


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class TopologySpec(_Spec):
    """Where W comes from: a toy graph, explicit weights, an edge list or a random graph."""

    kind: Literal["toy", "weights", "edges", "random"]
    toy: Optional[ToyKind] = None
    n: Optional[int] = Field(default=None, ge=1)
    epsilon: Optional[float] = Field(default=None, gt=0)
    weights: Optional[List[List[float]]] = None
    edges: Optional[List[List[int]]] = None
    edge_prob: float = Field(default=0.3, ge=0, le=1)
    seed: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_kind(self) -> "TopologySpec":
        if self.kind == "toy":
            if self.toy is None or self.n is None:
                raise ValueError("toy topologies need 'toy' and 'n'")
            if self.toy is not ToyKind.COMPLETE and self.epsilon is None:
                raise ValueError(f"{self.toy.value} topologies need 'epsilon'")
        elif self.kind == "weights":
            if self.weights is None:
                raise ValueError("weights topologies need 'weights'")
        elif self.kind == "edges":
            if self.n is None or self.edges is None or self.epsilon is None:
                raise ValueError("edge-list topologies need 'n', 'edges' and 'epsilon'")
        elif self.n is None:
            raise ValueError("random topologies need 'n'")
        return self

    def build(self, seed: int) -> Topology:
        if self.kind == "toy":
            return build_toy(self.toy, self.n, self.epsilon or 0.0)
        if self.kind == "weights":
            return Topology.from_weights(np.asarray(self.weights, dtype=float))
        if self.kind == "edges":
            return from_edges(self.n, self.edges, self.epsilon)
        rng = np.random.default_rng(seed if self.seed is None else self.seed)
        return random_connected(self.n, self.edge_prob, rng, self.epsilon)


class EnsembleSpec(_Spec):
    """Local objectives, either listed per agent or drawn at random."""

    kind: Literal["quadratic", "linreg", "logistic", "random_quadratic"]
    agents: Optional[List[Dict[str, Any]]] = None
    ridge: float = Field(default=0.0, ge=0)
    n_agents: Optional[int] = Field(default=None, ge=1)
    dim: int = Field(default=1, ge=1)
    mu: float = Field(default=1.0, gt=0)
    L: float = Field(default=4.0, gt=0)
    spread: float = Field(default=1.0, ge=0)
    seed: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_kind(self) -> "EnsembleSpec":
        if self.kind == "random_quadratic":
            if self.n_agents is None:
                raise ValueError("random_quadratic ensembles need 'n_agents'")
            if self.mu > self.L:
                raise ValueError(f"mu={self.mu} exceeds L={self.L}")
        elif not self.agents:
            raise ValueError(f"{self.kind} ensembles need a non-empty 'agents' list")
        return self

    def build(self, seed: int) -> ObjectiveEnsemble:
        if self.kind == "random_quadratic":
            rng = np.random.default_rng(seed if self.seed is None else self.seed)
            return random_quadratic_ensemble(self.n_agents, self.dim, rng, self.mu, self.L, self.spread)
        return ensemble_from_dict({"kind": self.kind, "agents": self.agents, "ridge": self.ridge})


class StepSpec(_Spec):
    kind: Literal["constant", "inverse_time"] = "constant"
    eta: float = Field(gt=0)
    tau: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_tau(self) -> "StepSpec":
        if self.kind == "inverse_time" and self.tau is None:
            raise ValueError("inverse_time schedules need 'tau'")
        return self

    def build(self) -> StepSchedule:
        if self.kind == "constant":
            return StepSchedule.constant(self.eta)
        return StepSchedule.inverse_time(self.eta, self.tau)


class AlgorithmSpec(_Spec):
    variant: Variant
    step: StepSpec
    local_updates: int = Field(default=1, ge=1)
    consensus_gamma: float = Field(default=1.0, gt=0, le=1)
    consensus_rounds: Optional[List[float]] = None

    def build(self) -> AlgorithmConfig:
        rounds = tuple(self.consensus_rounds) if self.consensus_rounds else None
        return AlgorithmConfig(
            self.variant, self.step.build(), self.local_updates, self.consensus_gamma, rounds
        )


class NoiseSpec(_Spec):
    kind: NoiseKind = NoiseKind.NONE
    source: NoiseSource = NoiseSource.SYNTHETIC
    sigma: float = Field(default=0.0, ge=0)
    omega: float = Field(default=0.0, ge=0)
    distribution: Distribution = Distribution.GAUSSIAN
    success_probs: Optional[List[List[float]]] = None
    success_prob: Optional[float] = Field(default=None, gt=0, le=1)
    mode: ProbabilityMode = ProbabilityMode.KNOWN

    @model_validator(mode="after")
    def _check_link_model(self) -> "NoiseSpec":
        if self.kind is NoiseKind.LINK_FAILURE:
            if (self.success_probs is None) == (self.success_prob is None):
                raise ValueError("link failures need exactly one of 'success_probs' and 'success_prob'")
        if self.kind is NoiseKind.COMMUNICATION and self.source is NoiseSource.ENSEMBLE:
            raise ValueError("communication noise is always synthetic")
        return self

    def build(self, n_agents: int) -> NoiseConfig:
        if self.kind is NoiseKind.NONE:
            return NoiseConfig.none()
        if self.kind is NoiseKind.GRADIENT_SAMPLING:
            return NoiseConfig.gradient(self.sigma, self.omega, self.distribution, self.source)
        if self.kind is NoiseKind.COMMUNICATION:
            return NoiseConfig.communication(self.sigma, self.omega, self.distribution)
        if self.success_probs is not None:
            model = LinkFailureModel(np.asarray(self.success_probs, dtype=float), self.mode)
        else:
            model = LinkFailureModel.uniform(n_agents, self.success_prob, self.mode)
        return NoiseConfig.link_failure(model)


class InitSpec(_Spec):
    """Initial iterate: zeros, an explicit N x d matrix, or a scaled eigenvector of W.

    Eigenvector indices are 1-based in descending eigenvalue order, so index 1
    is the consensus direction and index N the most negative mode.
    """

    kind: Literal["zeros", "matrix", "eigenvector"] = "zeros"
    matrix: Optional[List[List[float]]] = None
    index: int = Field(default=1, ge=1)
    scale: float = 1.0

    @model_validator(mode="after")
    def _check_matrix(self) -> "InitSpec":
        if self.kind == "matrix" and self.matrix is None:
            raise ValueError("matrix initializations need 'matrix'")
        return self

    def build(self, topo: Topology, ens: ObjectiveEnsemble) -> np.ndarray:
        shape = (ens.n_agents, ens.dim)
        if self.kind == "zeros":
            return np.zeros(shape)
        if self.kind == "matrix":
            X0 = self.scale * np.asarray(self.matrix, dtype=float)
            if X0.shape != shape:
                raise DomainError(f"initial matrix has shape {X0.shape}, expected {shape}", "init", X0)
            return X0
        if self.index > topo.n_agents:
            raise DomainError(
                f"eigenvector index {self.index} exceeds N={topo.n_agents}", "index", self.index
            )
        u = topo.spectrum.eigenvectors[:, self.index - 1]
        return self.scale * np.repeat(u[:, None], ens.dim, axis=1)


class OutputSpec(_Spec):
    dir: str = "out"
    trace_csv: str = "trace.csv"
    bounds_json: str = "bounds.json"
    comparison_json: str = "comparison.json"
    iterates_json: Optional[str] = None
    summary_csv: str = "sweep.csv"


class ExperimentConfig(_Spec):
    """One simulated configuration plus where its artifacts go."""

    schema_: Literal["degrad/1"] = Field(alias="schema")
    name: Optional[str] = None
    seed: int = Field(ge=0)
    topology: Optional[TopologySpec] = None
    ensemble: EnsembleSpec
    algorithm: AlgorithmSpec
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    init: InitSpec = Field(default_factory=InitSpec)
    n_iters: int = Field(ge=0)
    mc_paths: int = Field(default=1, ge=1)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="after")
    def _check_topology(self) -> "ExperimentConfig":
        if self.topology is None and self.algorithm.variant is not Variant.GD:
            raise ValueError(f"{self.algorithm.variant.value} needs a 'topology'")
        return self


class SweepGrid(_Spec):
    """Axes of the sweep. An omitted axis keeps the base value; an empty list empties the grid."""

    eta: Optional[List[float]] = None
    gamma: Optional[List[float]] = None
    local_updates: Optional[List[int]] = None
    topology_kind: Optional[List[ToyKind]] = None
    variant: Optional[List[Variant]] = None

    @field_validator("eta", "gamma")
    @classmethod
    def _positive(cls, values: Optional[List[float]]) -> Optional[List[float]]:
        if values is not None and any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ValueError("grid values must be positive and finite")
        return values

    def axes(self) -> Dict[str, Optional[list]]:
        return {
            "eta": self.eta,
            "gamma": self.gamma,
            "local_updates": self.local_updates,
            "topology_kind": self.topology_kind,
            "variant": self.variant,
        }

    def cardinality(self) -> int:
        total = 1
        for values in self.axes().values():
            if values is not None:
                total *= len(values)
        return total


class SweepConfig(_Spec):
    schema_: Literal["degrad/1"] = Field(alias="schema")
    name: Optional[str] = None
    seed: int = Field(ge=0)
    base: ExperimentConfig
    grid: SweepGrid = Field(default_factory=SweepGrid)
    output: OutputSpec = Field(default_factory=OutputSpec)


@dataclass
class Experiment:
    """Built domain objects of one ExperimentConfig."""
    config: ExperimentConfig
    topology: Topology
    ensemble: ObjectiveEnsemble
    algorithm: AlgorithmConfig
    noise: NoiseConfig
    X0: np.ndarray

    @property
    def seed(self) -> int:
        return self.config.seed


def build_experiment(config: ExperimentConfig) -> Experiment:
    ens = config.ensemble.build(config.seed)
    topo = config.topology.build(config.seed) if config.topology else single_agent()
    noise = config.noise.build(topo.n_agents)
    return Experiment(
        config=config,
        topology=topo,
        ensemble=ens,
        algorithm=config.algorithm.build(),
        noise=noise,
        X0=config.init.build(topo, ens),
    )


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config: {e}", config_key="config", path=str(path))
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"malformed JSON: {e}", config_key="config", path=str(path))
    if not isinstance(payload, dict):
        raise ConfigurationError("config must be a JSON object", config_key="config", path=str(path))
    return payload


def _validate(model: type, payload: Dict[str, Any], path: Optional[str]) -> Any:
    try:
        return model.model_validate(payload)
    except SchemaError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigurationError(
            f"{e.error_count()} schema error(s); first at '{key}': {first['msg']}",
            config_key=key,
            path=path,
        )


def parse_experiment(payload: Dict[str, Any], path: Optional[str] = None) -> ExperimentConfig:
    return _validate(ExperimentConfig, payload, path)


def parse_sweep(payload: Dict[str, Any], path: Optional[str] = None) -> SweepConfig:
    return _validate(SweepConfig, payload, path)


def load_experiment(path: Union[str, Path], seed: Optional[int] = None) -> ExperimentConfig:
    """Read and validate an experiment document; ``seed`` overrides the document's."""

    config = parse_experiment(read_document(path), str(path))
    if seed is not None:
        config = config.model_copy(update={"seed": int(seed)})
    logger.info(f"Loaded experiment config from {path} (seed={config.seed})")
    return config


def load_sweep(path: Union[str, Path], seed: Optional[int] = None) -> SweepConfig:
    config = parse_sweep(read_document(path), str(path))
    if seed is not None:
        config = config.model_copy(update={"seed": int(seed)})
    if config.grid.cardinality() > MAX_GRID_CELLS:
        raise DomainError(
            f"sweep grid has {config.grid.cardinality()} cells, more than {MAX_GRID_CELLS}",
            "grid",
            config.grid.cardinality(),
        )
    return config


def experiment_schema() -> Dict[str, Any]:
    return ExperimentConfig.model_json_schema(by_alias=True)


def load_topology(path: Union[str, Path], seed: int = 0, *, strict: bool = True) -> Topology:
    """Topology from a TopologySpec document, {"n", "weights"} or {"n", "edges", "epsilon"}.

    With strict=False explicit weights skip the invariant checks so that they can
    be diagnosed instead of rejected.
    """

    payload = read_document(path)
    if "kind" in payload:
        return _validate(TopologySpec, payload, str(path)).build(seed)
    if "weights" in payload:
        return Topology.from_dict(payload, strict=strict)
    if "edges" in payload:
        try:
            return from_edges(int(payload["n"]), payload["edges"], float(payload["epsilon"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"malformed edge-list document: {e}", config_key="edges", path=str(path))
    raise ConfigurationError(
        "topology documents need 'kind', 'weights' or 'edges'", config_key="topology", path=str(path)
    )
