"""
Consensus weight matrices.

Builds, validates and analyzes the symmetric weight matrix W that agents use to
average their iterates. Spectra are computed once per topology and cached.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Sequence

import networkx as nx
import numpy as np
from scipy import linalg
from scipy.sparse import csgraph

from ..middleware import (
    DomainError,
    NumericalError,
    TopologyError,
    ValidationError,
    validate_positive,
    validate_square_matrix,
    validate_unit_interval,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
ROW_SUM_TOL = 1e-12
SUPPORT_TOL = 1e-14
PINV_TOL = 1e-10
EIG_MARGIN = 1e-10


class ToyKind(str, Enum):
    COMPLETE = "complete"
    STAR = "star"
    LINE = "line"
    RING = "ring"


class FactorKind(str, Enum):
    """Which topology factor a mixing scheme pays."""
    DGD = "dgd"
    DIFFUSION = "diffusion"


@dataclass(frozen=True)
class SpectrumReport:
    """Eigen-decomposition of W sorted in descending order."""
    eigenvalues: np.ndarray
    lambda2: float
    lambdaN: float
    eigenvectors: np.ndarray

    def reconstruction_error(self, weights: np.ndarray) -> float:
        U = self.eigenvectors
        rebuilt = (U * self.eigenvalues) @ U.T
        return float(np.linalg.norm(rebuilt - weights, 2))


@dataclass(frozen=True)
class ValidityReport:
    """Diagnostics for a weight matrix. Never raises."""
    is_symmetric: bool
    rows_sum_to_one: bool
    is_connected: bool
    satisfies_eig_condition: bool
    is_nonnegative: bool
    is_bipartite: bool
    messages: List[str] = field(default_factory=list)
    lambda2: Optional[float] = None
    lambdaN: Optional[float] = None

    @property
    def is_valid(self) -> bool:
        return (
            self.is_symmetric
            and self.rows_sum_to_one
            and self.is_connected
            and self.satisfies_eig_condition
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "is_symmetric": self.is_symmetric,
            "rows_sum_to_one": self.rows_sum_to_one,
            "is_connected": self.is_connected,
            "satisfies_eig_condition": self.satisfies_eig_condition,
            "is_nonnegative": self.is_nonnegative,
            "is_bipartite": self.is_bipartite,
            "lambda2": self.lambda2,
            "lambdaN": self.lambdaN,
            "messages": list(self.messages),
        }


@dataclass(frozen=True, eq=False)
class Topology:
    """Symmetric consensus weight matrix with a lazily cached spectrum.

    Use :meth:`from_weights` to build a checked instance; the bare
    constructor skips the invariant checks so that :func:`validate` can
    diagnose arbitrary matrices.
    """
    weights: np.ndarray

    def __post_init__(self):
        weights = validate_square_matrix(self.weights, "weights").copy()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_weights(cls, weights: Any, *, strict: bool = True) -> "Topology":
        topo = cls(np.asarray(weights, dtype=float))
        if strict:
            _check_invariants(topo)
        return topo

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def spectrum(self) -> SpectrumReport:
        return _compute_spectrum(self.weights)

    @property
    def lambda2(self) -> float:
        return self.spectrum.lambda2

    @property
    def lambdaN(self) -> float:
        return self.spectrum.lambdaN

    def support(self) -> np.ndarray:
        """Boolean adjacency of nonzero off-diagonal weights."""
        mask = np.abs(self.weights) > SUPPORT_TOL
        np.fill_diagonal(mask, False)
        return mask

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n_agents, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any], *, strict: bool = True) -> "Topology":
        try:
            n = int(payload["n"])
            weights = np.asarray(payload["weights"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed topology document: {e}", "weights")
        if weights.shape != (n, n):
            raise ValidationError(
                f"weights must be {n}x{n}, got {weights.shape}", "weights", weights
            )
        return cls.from_weights(weights, strict=strict)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str, *, strict: bool = True) -> "Topology":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"Malformed topology JSON: {e}", "weights")
        if not isinstance(payload, dict):
            raise ValidationError("topology JSON must be an object", "weights")
        return cls.from_dict(payload, strict=strict)


def _compute_spectrum(weights: np.ndarray) -> SpectrumReport:
    n = weights.shape[0]
    try:
        values, vectors = linalg.eigh(weights)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Eigensolver failed: {e}", operation="eigh")

    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    for k in range(n):
        column = vectors[:, k]
        nonzero = np.flatnonzero(np.abs(column) > 1e-12)
        if nonzero.size and column[nonzero[0]] < 0:
            vectors[:, k] = -column

    # pin the consensus mode exactly when it is simple
    simple_top = n == 1 or values[1] < 1.0 - 1e-9
    if abs(values[0] - 1.0) <= 1e-9 and simple_top and _row_sum_defect(weights) <= 1e-9:
        vectors[:, 0] = 1.0 / np.sqrt(n)

    if n == 1:
        # no disagreement mode: report it as perfectly mixed
        lambda2, lambdaN = 0.0, float(values[0])
    else:
        lambda2, lambdaN = float(values[1]), float(values[-1])

    values.setflags(write=False)
    vectors.setflags(write=False)
    return SpectrumReport(
        eigenvalues=values,
        lambda2=lambda2,
        lambdaN=lambdaN,
        eigenvectors=vectors,
    )


def _row_sum_defect(weights: np.ndarray) -> float:
    if weights.size == 0:
        return 0.0
    return float(np.max(np.abs(weights.sum(axis=1) - 1.0)))


def _is_connected(mask: np.ndarray) -> bool:
    n = mask.shape[0]
    if n <= 1:
        return True
    n_components, _ = csgraph.connected_components(mask.astype(np.int8), directed=False)
    return n_components == 1


def _check_invariants(topo: Topology) -> None:
    W = topo.weights
    asymmetry = float(np.max(np.abs(W - W.T)))
    if asymmetry > SYMMETRY_TOL:
        raise TopologyError(
            f"weights are not symmetric (max asymmetry {asymmetry:.3e})",
            check="symmetric",
        )
    defect = _row_sum_defect(W)
    if defect > ROW_SUM_TOL:
        raise TopologyError(
            f"rows do not sum to one (max defect {defect:.3e})",
            check="row_sums",
        )
    if not _is_connected(topo.support()):
        raise TopologyError("support graph is disconnected", check="connected")


def validate(t: Topology) -> ValidityReport:
    """Diagnose a weight matrix without raising."""

    W = t.weights
    n = t.n_agents
    messages: List[str] = []

    asymmetry = float(np.max(np.abs(W - W.T))) if n else 0.0
    is_symmetric = asymmetry <= SYMMETRY_TOL
    if not is_symmetric:
        messages.append(f"asymmetric: max |W - W^T| = {asymmetry:.3e}")

    defect = _row_sum_defect(W)
    rows_sum_to_one = defect <= ROW_SUM_TOL
    if not rows_sum_to_one:
        messages.append(f"row sums deviate from 1 by up to {defect:.3e}")

    mask = t.support()
    is_connected = _is_connected(mask)
    if not is_connected:
        messages.append("support graph is disconnected")

    is_nonnegative = bool(np.all(W >= -SUPPORT_TOL))
    if not is_nonnegative:
        messages.append("weights contain negative entries")

    graph = nx.from_numpy_array(mask.astype(int))
    is_bipartite = bool(nx.is_bipartite(graph)) if n > 1 else False
    if is_bipartite:
        messages.append("support graph is bipartite")

    lambda2: Optional[float] = None
    lambdaN: Optional[float] = None
    satisfies_eig_condition = False
    if is_symmetric:
        try:
            spectrum = t.spectrum
            lambda2, lambdaN = spectrum.lambda2, spectrum.lambdaN
            satisfies_eig_condition = (
                lambda2 < 1.0 - EIG_MARGIN and lambdaN > -1.0 + EIG_MARGIN
            )
            if not satisfies_eig_condition:
                messages.append(
                    f"eigenvalue condition violated: lambda2={lambda2:.6g}, lambdaN={lambdaN:.6g}"
                )
        except NumericalError as e:
            messages.append(str(e))
    else:
        messages.append("eigenvalue condition not evaluated for an asymmetric matrix")

    return ValidityReport(
        is_symmetric=is_symmetric,
        rows_sum_to_one=rows_sum_to_one,
        is_connected=is_connected,
        satisfies_eig_condition=satisfies_eig_condition,
        is_nonnegative=is_nonnegative,
        is_bipartite=is_bipartite,
        messages=messages,
        lambda2=lambda2,
        lambdaN=lambdaN,
    )


def spectrum(t: Topology) -> SpectrumReport:
    return t.spectrum


def _laplacian_weights(graph: nx.Graph, n: int, epsilon: float) -> Topology:
    epsilon = validate_positive(epsilon, "epsilon")
    degrees = [deg for _, deg in graph.degree()]
    k_max = max(degrees) if degrees else 0
    if k_max > 0 and epsilon >= 1.0 / k_max:
        raise DomainError(
            f"epsilon={epsilon} must be below 1/k_max={1.0 / k_max:.6g}",
            "epsilon",
            epsilon,
        )
    laplacian = nx.laplacian_matrix(graph, nodelist=range(n)).toarray().astype(float)
    return Topology.from_weights(np.eye(n) - epsilon * laplacian)


def build_toy(kind: ToyKind, n: int, epsilon: float = 0.0) -> Topology:
    """Complete, star, line or ring topology with Laplacian weights."""

    kind = ToyKind(kind)
    if n < 2:
        raise DomainError(f"toy topologies need n >= 2, got {n}", "n", n)

    if kind is ToyKind.COMPLETE:
        return Topology.from_weights(np.full((n, n), 1.0 / n))
    if kind is ToyKind.STAR:
        graph = nx.star_graph(n - 1)
    elif kind is ToyKind.LINE:
        graph = nx.path_graph(n)
    else:
        if n < 3:
            raise DomainError(f"a ring needs n >= 3, got {n}", "n", n)
        graph = nx.cycle_graph(n)

    logger.debug(f"Building {kind.value} topology with n={n}, epsilon={epsilon}")
    return _laplacian_weights(graph, n, epsilon)


def toy_spectral_gap(kind: ToyKind, n: int, epsilon: float) -> float:
    """Closed-form 1 - lambda2 for the Laplacian toy graphs."""

    kind = ToyKind(kind)
    if kind is ToyKind.COMPLETE:
        return n * epsilon
    if kind is ToyKind.STAR:
        return epsilon
    if kind is ToyKind.LINE:
        return 4.0 * np.sin(np.pi / (2 * n)) ** 2 * epsilon
    return 4.0 * np.sin(np.pi / n) ** 2 * epsilon


def from_laplacian(adjacency: Any, epsilon: float) -> Topology:
    """W = I - epsilon * L for a symmetric 0/1 adjacency matrix."""

    A = validate_square_matrix(adjacency, "adjacency")
    if not np.all((A == 0) | (A == 1)):
        raise ValidationError("adjacency entries must be 0 or 1", "adjacency", A)
    if np.any(A != A.T):
        raise ValidationError("adjacency must be symmetric", "adjacency", A)
    if np.any(np.diag(A) != 0):
        raise ValidationError("adjacency must have a zero diagonal", "adjacency", A)
    if not _is_connected(A.astype(bool)):
        raise TopologyError("adjacency graph is disconnected", check="connected")

    n = A.shape[0]
    graph = nx.from_numpy_array(A.astype(int))
    return _laplacian_weights(graph, n, epsilon)


def from_edges(n: int, edges: Iterable[Sequence[int]], epsilon: float) -> Topology:
    """Build from the {"n", "edges"} document form (0-based indices)."""

    A = np.zeros((n, n))
    for edge in edges:
        if len(edge) != 2:
            raise ValidationError(f"edge {edge} must have two endpoints", "edges", edge)
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValidationError(f"invalid edge ({i}, {j}) for n={n}", "edges", edge)
        A[i, j] = A[j, i] = 1.0
    return from_laplacian(A, epsilon)


def random_connected(
    n: int,
    edge_prob: float,
    rng: np.random.Generator,
    epsilon: Optional[float] = None
) -> Topology:
    """Random connected graph: a shuffled spanning path plus Bernoulli edges.

    epsilon defaults to 1/(k_max + 1).
    """

    if n < 2:
        raise DomainError(f"random topologies need n >= 2, got {n}", "n", n)
    order = rng.permutation(n)
    A = np.zeros((n, n))
    for a, b in zip(order[:-1], order[1:]):
        A[a, b] = A[b, a] = 1.0
    extra = np.triu(rng.random((n, n)) < edge_prob, k=1)
    A = np.maximum(A, (extra | extra.T).astype(float))
    np.fill_diagonal(A, 0.0)

    if epsilon is None:
        epsilon = 1.0 / (A.sum(axis=1).max() + 1.0)
    return from_laplacian(A, epsilon)


def _require_disagreement_gap(t: Topology) -> float:
    lambda2 = t.lambda2
    if lambda2 >= 1.0 - EIG_MARGIN:
        raise TopologyError(
            f"lambda2={lambda2:.6g} is not below 1",
            check="lambda2",
            diagnostics={"lambda2": lambda2},
        )
    return lambda2


def diffusion_norm(t: Topology) -> float:
    """Spectral norm of (I - W)^+ W, computed mode by mode."""

    _require_disagreement_gap(t)
    values = t.spectrum.eigenvalues
    gaps = 1.0 - values
    active = np.abs(gaps) > PINV_TOL
    if not np.any(active):
        return 0.0
    return float(np.max(np.abs(values[active] / gaps[active])))


def pseudo_inverse_gap(t: Topology) -> np.ndarray:
    """(I - W)^+ assembled from the spectrum."""

    spectrum = t.spectrum
    gaps = 1.0 - spectrum.eigenvalues
    inverse = np.zeros_like(gaps)
    active = np.abs(gaps) > PINV_TOL
    inverse[active] = 1.0 / gaps[active]
    U = spectrum.eigenvectors
    return (U * inverse) @ U.T


def topology_factor(t: Topology, kind: FactorKind) -> float:
    """Lambda = 1/(1 - lambda2) for DGD, 2 ||(I - W)^+ W|| for diffusion."""

    kind = FactorKind(kind)
    lambda2 = _require_disagreement_gap(t)
    if kind is FactorKind.DGD:
        return 1.0 / (1.0 - lambda2)
    return 2.0 * diffusion_norm(t)


def scale_consensus(t: Topology, gamma: float) -> Topology:
    """W' = (1 - gamma) I + gamma W."""

    gamma = validate_unit_interval(gamma, "gamma")
    if gamma == 1.0:
        return t
    n = t.n_agents
    return Topology.from_weights((1.0 - gamma) * np.eye(n) + gamma * t.weights)


def combine_rounds(t: Topology, alphas: Sequence[float]) -> Topology:
    """W' = sum_k alpha_k W^k for k = 1..K."""

    alphas = np.asarray(alphas, dtype=float).ravel()
    if alphas.size == 0:
        raise DomainError("round weights must not be empty", "alphas", alphas)
    if np.any(alphas < 0):
        raise DomainError("round weights must be nonnegative", "alphas", alphas)
    total = float(alphas.sum())
    if abs(total - 1.0) > 1e-12:
        raise DomainError(f"round weights sum to {total}, not 1", "alphas", alphas)

    W = t.weights
    power = np.eye(t.n_agents)
    combined = np.zeros_like(W)
    for alpha in alphas:
        power = power @ W
        combined += alpha * power
    combined = 0.5 * (combined + combined.T)
    return Topology.from_weights(combined)


def single_agent() -> Topology:
    return Topology.from_weights(np.ones((1, 1)))


def complete_weights(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def spectral_summary(t: Topology) -> Dict[str, Any]:
    """JSON-ready spectrum description used by the CLI."""

    spectrum = t.spectrum
    summary: Dict[str, Any] = {
        "n": t.n_agents,
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "lambda2": spectrum.lambda2,
        "lambdaN": spectrum.lambdaN,
        "reconstruction_error": spectrum.reconstruction_error(t.weights),
    }
    try:
        summary["Lambda_dgd"] = topology_factor(t, FactorKind.DGD)
        summary["Lambda_diffusion"] = topology_factor(t, FactorKind.DIFFUSION)
    except TopologyError as e:
        summary["Lambda_error"] = e.message
    return summary

