"""
Seeded ground-truth random graphs.

Four families are supported:

- ``rgg``: random geometric graph on the unit square with Gaussian weights cut at a threshold.
- ``nonuniform``: the same construction on a [0, 1] x [0, 5] strip whose density decays as
  ``1 / (1 + a * x2)``, cut at an adaptive threshold that keeps every node attached.
- ``erdos_renyi``: binary Gilbert G(m, p) graph.
- ``barabasi_albert``: binary preferential attachment graph grown from a single edge.

Every function takes a ``seed`` (integer or tuple of integers) and is deterministic under it.
Disconnected instances are returned as they are.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import GraphModelSpecError
from .graph_core import validate_edge_vector, vectorform
from .toolkits import make_rng, seed_to_int
from .types import EdgeVector, GraphKind, SeedKey

logger = logging.getLogger(__name__)

STRIP_HEIGHT = 5.0

__all__ = [
    'STRIP_HEIGHT',
    'GraphModelSpec',
    'GeneratedGraph',
    'rgg',
    'nonuniform',
    'nonuniform_inverse_cdf',
    'erdos_renyi',
    'barabasi_albert',
    'generate',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


@dataclass
class GraphModelSpec:
    """
    Declarative description of a random graph family and its parameters.

    Parameters irrelevant to ``kind`` are kept but ignored. ``p`` defaults to ``3 / m``.
    """
    kind: GraphKind = GraphKind.RGG
    m: int = 100
    seed: int = 0
    sigma: float = 0.2
    threshold: float = 0.6
    density_param: float = 2.0
    p: Optional[float] = None
    edges_per_node: int = 2

    def __post_init__(self):
        try:
            self.kind = GraphKind(self.kind)
        except ValueError:
            raise GraphModelSpecError(f"Unknown graph kind {self.kind!r}") from None
        if self.m < 2:
            raise GraphModelSpecError(f"A graph needs m >= 2 nodes, got {self.m}")
        if self.seed < 0:
            raise GraphModelSpecError(f"Seeds must be nonnegative, got {self.seed}")
        if self.sigma <= 0:
            raise GraphModelSpecError(f"sigma must be positive, got {self.sigma}")
        if not 0 <= self.threshold < 1:
            raise GraphModelSpecError(f"threshold must lie in [0, 1), got {self.threshold}")
        if self.density_param <= 0:
            raise GraphModelSpecError(f"density_param must be positive, got {self.density_param}")
        if self.p is not None and not 0 <= self.p <= 1:
            raise GraphModelSpecError(f"p must lie in [0, 1], got {self.p}")
        if self.kind is GraphKind.BARABASI_ALBERT:
            _check_barabasi_albert(self.m, self.edges_per_node)

    @property
    def edge_probability(self) -> float:
        """``p``, or ``3 / m`` when unset."""
        return min(1.0, 3.0 / self.m) if self.p is None else self.p

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GraphModelSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise GraphModelSpecError(f"Unknown graph model keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class GeneratedGraph:
    """A sampled graph, with the node coordinates when the family has any."""
    weights: EdgeVector = field(repr=False)
    spec: GraphModelSpec
    seed: SeedKey
    coords: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))


def _check_barabasi_albert(m: int, edges_per_node: int) -> None:
    if edges_per_node < 1:
        raise GraphModelSpecError(f"edges_per_node must be at least 1, got {edges_per_node}")
    if m < max(3, edges_per_node + 1):
        raise GraphModelSpecError(f"Preferential attachment with {edges_per_node} edges per node needs "
                                  f"m >= {max(3, edges_per_node + 1)}, got {m}")


def _gaussian_weights(coords: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-pdist(coords, metric="sqeuclidean") / (2.0 * sigma ** 2))


def rgg(m: int, sigma: float = 0.2, threshold: float = 0.6,
        seed: SeedKey = 0) -> Tuple[EdgeVector, np.ndarray]:
    """
    Random geometric graph on the unit square.

    Weights are ``exp(-||x_i - x_j||^2 / (2 sigma^2))``; those below ``threshold`` are zeroed.

    Returns:
        Tuple[EdgeVector, np.ndarray]: weights and the m x 2 coordinates.
    """
    coords = make_rng(seed).uniform(size=(m, 2))
    w = _gaussian_weights(coords, sigma)
    w[w < threshold] = 0.0
    return validate_edge_vector(w, m), coords


def nonuniform_inverse_cdf(u, a: float, height: float = STRIP_HEIGHT) -> np.ndarray:
    """
    Inverse CDF of the density proportional to ``1 / (1 + a x)`` on ``[0, height]``.

    The CDF is ``log(1 + a x) / log(1 + a height)``, hence ``x = ((1 + a height)^u - 1) / a``.

    >>> round(float(nonuniform_inverse_cdf(0.5, 2.0)), 6)  # (sqrt(11) - 1) / 2
    1.158312
    """
    u = np.asarray(u, dtype=float)
    return np.expm1(u * np.log1p(a * height)) / a


def nonuniform(m: int, sigma: float = 0.2, density_param: float = 2.0,
               seed: SeedKey = 0) -> Tuple[EdgeVector, np.ndarray]:
    """
    Gaussian-weighted graph on points with a non-uniform density along the second axis.

    The threshold is the weakest "best connection": the minimum over nodes of the node's
    largest weight. Every node therefore keeps at least one edge.
    """
    rng = make_rng(seed)
    coords = np.column_stack([rng.uniform(size=m), nonuniform_inverse_cdf(rng.uniform(size=m), density_param)])
    w = _gaussian_weights(coords, sigma)
    threshold = squareform(w, checks=False).max(axis=1).min()
    w[w < threshold] = 0.0
    logger.debug(f"Non-uniform graph on {m} nodes: adaptive threshold {threshold:.4g}")
    return validate_edge_vector(w, m), coords


def erdos_renyi(m: int, p: Optional[float] = None, seed: SeedKey = 0) -> EdgeVector:
    """Binary G(m, p) graph; ``p`` defaults to ``3 / m``."""
    p = min(1.0, 3.0 / m) if p is None else p
    if not 0 <= p <= 1:
        raise GraphModelSpecError(f"p must lie in [0, 1], got {p}")
    G = nx.gnp_random_graph(m, p, seed=seed_to_int(seed))
    return vectorform(nx.to_numpy_array(G, nodelist=range(m)))


def barabasi_albert(m: int, edges_per_node: int = 2, seed: SeedKey = 0) -> EdgeVector:
    """
    Binary preferential attachment graph.

    Growth starts from the single edge (0, 1); each later node attaches to
    ``edges_per_node`` distinct existing nodes drawn proportionally to their degree. With one
    or two edges per node the result has ``1 + edges_per_node * (m - 2)`` edges. Larger values
    start from a complete graph on ``edges_per_node`` nodes instead, since a smaller seed
    cannot supply enough distinct targets.
    """
    _check_barabasi_albert(m, edges_per_node)
    initial = nx.complete_graph(max(2, edges_per_node))
    G = nx.barabasi_albert_graph(m, edges_per_node, seed=seed_to_int(seed), initial_graph=initial)
    return vectorform(nx.to_numpy_array(G, nodelist=range(m)))


def generate(spec: GraphModelSpec, seed: Optional[SeedKey] = None) -> GeneratedGraph:
    """
    Sample the graph described by ``spec``.

    Args:
        spec: Graph family and parameters.
        seed: Overrides ``spec.seed``; the experiment passes ``(seed, trial, GRAPH_STREAM)``.
    """
    key = spec.seed if seed is None else seed
    coords = None
    if spec.kind is GraphKind.RGG:
        w, coords = rgg(spec.m, spec.sigma, spec.threshold, key)
    elif spec.kind is GraphKind.NON_UNIFORM:
        w, coords = nonuniform(spec.m, spec.sigma, spec.density_param, key)
    elif spec.kind is GraphKind.ERDOS_RENYI:
        w = erdos_renyi(spec.m, spec.edge_probability, key)
    else:
        w = barabasi_albert(spec.m, spec.edges_per_node, key)
    logger.info(f"Generated {spec.kind.value} graph: m={spec.m}, {np.count_nonzero(w)} edges, seed={key}")
    return GeneratedGraph(weights=w, spec=spec, seed=key, coords=coords)
