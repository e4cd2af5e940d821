"""
Evaluation of a learned graph against the ground truth.

Edge patterns are compared after binarization: an edge is present when its weight exceeds
``rel_threshold`` times the largest weight (``DEFAULT_REL_THRESHOLD`` by default). Weighted
errors compare the learned graph to the truth after rescaling it to the same l1 or l2 norm, so
they ignore the overall scale of the solution. Every edge is counted once (i < j).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, NamedTuple, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import ValidationError
from .graph_core import degree_map, node_count, pair_indices, validate_edge_vector
from .types import EdgeVector

logger = logging.getLogger(__name__)

DEFAULT_REL_THRESHOLD = 1e-4

__all__ = [
    'DEFAULT_REL_THRESHOLD',
    'EvaluationReport',
    'ConnectivityPoint',
    'binarize_edges',
    'precision_recall',
    'f_measure',
    'relative_edge_error',
    'relative_degree_error',
    'connectivity',
    'edges_per_node',
    'evaluate',
    'connectivity_curve',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


@dataclass(frozen=True)
class EvaluationReport:
    """All metrics of one learned graph."""
    f_measure: float
    precision: float
    recall: float
    edge_l1: float
    edge_l2: float
    degree_l1: float
    degree_l2: float
    component_count: int
    disconnected_node_count: int
    edges_per_node: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class ConnectivityPoint(NamedTuple):
    edges_per_node: float
    component_count: int
    disconnected_node_count: int


def _check_threshold(rel_threshold: float) -> None:
    if not 0 <= rel_threshold < 1:
        raise ValidationError(f"rel_threshold must lie in [0, 1), got {rel_threshold}")


def _pattern(w, rel_threshold: float) -> np.ndarray:
    _check_threshold(rel_threshold)
    w = validate_edge_vector(w)
    if w.size == 0 or w.max() == 0:
        return np.zeros(w.size, dtype=bool)
    return w > rel_threshold * w.max()


def _pair(w_learned, w_true) -> Tuple[np.ndarray, np.ndarray]:
    w_learned = validate_edge_vector(w_learned)
    w_true = validate_edge_vector(w_true)
    if w_learned.size != w_true.size:
        raise ValidationError(f"Graphs of different sizes: {w_learned.size} and {w_true.size} edges")
    return w_learned, w_true


def binarize_edges(w, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> EdgeVector:
    """0/1 edge vector: 1 where ``w > rel_threshold * max(w)``."""
    return EdgeVector(_pattern(w, rel_threshold).astype(float))


def precision_recall(w_learned, w_true, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> Tuple[float, float]:
    """Edge precision and recall of the binarized patterns; 0 when the denominator is empty."""
    w_learned, w_true = _pair(w_learned, w_true)
    learned = _pattern(w_learned, rel_threshold)
    truth = _pattern(w_true, rel_threshold)
    hits = np.count_nonzero(learned & truth)
    precision = hits / np.count_nonzero(learned) if learned.any() else 0.0
    recall = hits / np.count_nonzero(truth) if truth.any() else 0.0
    return float(precision), float(recall)


def f_measure(w_learned, w_true, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> float:
    """Harmonic mean of edge precision and recall, 0 when both are 0."""
    precision, recall = precision_recall(w_learned, w_true, rel_threshold)
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _rescaled(w_learned: np.ndarray, w_true: np.ndarray, p: int):
    if p not in (1, 2):
        raise ValidationError(f"p must be 1 or 2, got {p}")
    true_norm = np.linalg.norm(w_true, ord=p)
    if true_norm == 0:
        raise ValidationError("Relative errors are undefined for an empty ground truth")
    if not np.any(w_learned):
        return None
    # Max-normalized first: the norm must not overflow or underflow.
    w_learned = w_learned / w_learned.max()
    return w_learned * (true_norm / np.linalg.norm(w_learned, ord=p))


def relative_edge_error(w_learned, w_true, p: int = 2) -> float:
    """
    ``||w_hat - w_true||_p / ||w_true||_p`` with ``w_hat`` the learned graph rescaled to the
    l``p`` norm of the truth. An empty learned graph scores 1.

    Raises:
        ValidationError: If the ground truth is empty.
    """
    w_learned, w_true = _pair(w_learned, w_true)
    w_hat = _rescaled(w_learned, w_true, p)
    if w_hat is None:
        return 1.0
    return float(np.linalg.norm(w_hat - w_true, ord=p) / np.linalg.norm(w_true, ord=p))


def relative_degree_error(w_learned, w_true, p: int = 2) -> float:
    """Same as ``relative_edge_error`` on the degrees, after rescaling the edges."""
    w_learned, w_true = _pair(w_learned, w_true)
    w_hat = _rescaled(w_learned, w_true, p)
    if w_hat is None:
        return 1.0
    m = node_count(w_true.size)
    d_true = degree_map(w_true, m)
    return float(np.linalg.norm(degree_map(w_hat, m) - d_true, ord=p) / np.linalg.norm(d_true, ord=p))


def connectivity(w, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> Tuple[int, int]:
    """
    Number of connected components and of isolated (degree 0) nodes of the binarized graph.

    >>> connectivity([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    (2, 0)
    """
    pattern = _pattern(w, rel_threshold)
    m = node_count(pattern.size)
    rows, cols = pair_indices(m)
    adjacency = coo_matrix((np.ones(np.count_nonzero(pattern)), (rows[pattern], cols[pattern])), shape=(m, m))
    components, _ = connected_components(adjacency, directed=False)
    degrees = np.bincount(rows[pattern], minlength=m) + np.bincount(cols[pattern], minlength=m)
    return int(components), int(np.count_nonzero(degrees == 0))


def edges_per_node(w, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> float:
    """Average number of edges touching a node, ``2 |E| / m``."""
    pattern = _pattern(w, rel_threshold)
    return 2.0 * np.count_nonzero(pattern) / node_count(pattern.size)


def evaluate(w_learned, w_true, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> EvaluationReport:
    """Compute every metric of ``w_learned`` against ``w_true``."""
    w_learned, w_true = _pair(w_learned, w_true)
    precision, recall = precision_recall(w_learned, w_true, rel_threshold)
    components, isolated = connectivity(w_learned, rel_threshold)
    return EvaluationReport(
        f_measure=f_measure(w_learned, w_true, rel_threshold),
        precision=precision,
        recall=recall,
        edge_l1=relative_edge_error(w_learned, w_true, 1),
        edge_l2=relative_edge_error(w_learned, w_true, 2),
        degree_l1=relative_degree_error(w_learned, w_true, 1),
        degree_l2=relative_degree_error(w_learned, w_true, 2),
        component_count=components,
        disconnected_node_count=isolated,
        edges_per_node=edges_per_node(w_learned, rel_threshold),
    )


def connectivity_curve(solutions: Iterable, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> List[ConnectivityPoint]:
    """Density and connectivity of a sequence of solutions, e.g. along a parameter path."""
    curve = []
    for w in solutions:
        components, isolated = connectivity(w, rel_threshold)
        curve.append(ConnectivityPoint(edges_per_node(w, rel_threshold), components, isolated))
    logger.debug(f"Connectivity curve over {len(curve)} solutions")
    return curve
