"""
Canonical representations of a weighted undirected graph and the identities that connect them.

A graph on m nodes lives in three equivalent spaces:

- the combinatorial Laplacians ``L = D - W`` (dense m x m),
- the valid adjacency matrices ``W`` (symmetric, nonnegative, zero diagonal),
- the edge vectors ``w`` of length m(m-1)/2, the solver's native space.

Edge vectors are ordered as all pairs (i, j), i < j, in row-major upper-triangular order with
0-indexed nodes. This is the order of ``numpy.triu_indices(m, 1)`` and of
``scipy.spatial.distance.pdist``/``squareform``, so distance vectors computed from data line
up with edge vectors without any reindexing.

The degree operator S (``Sw = W1``) is never materialized in the hot paths: ``degree_map`` and
``degree_adjoint`` work on the cached pair indices in O(m^2) time and memory.

Functions:
    - vectorform / matrixform: Bijection between adjacency matrices and edge vectors.
    - degree_map / degree_adjoint: The operator S and its adjoint.
    - operator_norm_S: Spectral norm of S.
    - laplacian_from_edges: L = D - W.
    - smoothness_value: tr(X^T L X), equal to w^T z.
    - pairwise_distances: Squared Euclidean distances in edge order.
    - knn_edges: Symmetrized k-nearest-neighbour graph from a distance vector.
    - table_identities: Relative residuals of all the equivalences between the three spaces.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from .exceptions import GraphValidationError
from .types import AdjacencyMatrix, DataMatrix, DegreeVector, DistanceVector, EdgeVector, LaplacianMatrix

logger = logging.getLogger(__name__)

__all__ = [
    # Sizes and indices
    'edge_count',
    'node_count',
    'pair_indices',

    # Validation
    'validate_edge_vector',
    'validate_adjacency',
    'validate_laplacian',

    # Space conversions
    'vectorform',
    'matrixform',
    'laplacian_from_edges',

    # Degree operator
    'degree_map',
    'degree_adjoint',
    'degree_operator_matrix',
    'operator_norm_S',

    # Data-dependent quantities
    'pairwise_distances',
    'smoothness_value',
    'sparsity_absorbed_distances',
    'knn_edges',

    # Self checks
    'table_identities',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


def edge_count(m: int) -> int:
    """Number of node pairs, m(m-1)/2."""
    if m < 1:
        raise GraphValidationError(f"A graph needs at least one node, got m={m}")
    return m * (m - 1) // 2


def node_count(n_edges: int) -> int:
    """
    Recover m from the length of an edge vector.

    Raises:
        GraphValidationError: If ``n_edges`` is not a triangular number.
    """
    if n_edges < 0:
        raise GraphValidationError(f"Negative edge vector length {n_edges}")
    m = (1 + math.isqrt(1 + 8 * n_edges)) // 2
    if m * (m - 1) // 2 != n_edges:
        raise GraphValidationError(f"Length {n_edges} is not m(m-1)/2 for any node count m")
    return m


@lru_cache(maxsize=32)
def pair_indices(m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column index of every edge, in edge-vector order. The arrays are read-only."""
    rows, cols = np.triu_indices(m, k=1)
    rows.flags.writeable = False
    cols.flags.writeable = False
    return rows, cols


def validate_edge_vector(w, m: Optional[int] = None) -> EdgeVector:
    """
    Check the EdgeVector invariants and return ``w`` as a float64 1-D array.

    Args:
        w: Candidate edge weights.
        m: Expected node count, if known.

    Raises:
        GraphValidationError: On wrong length, non-finite or negative entries.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise GraphValidationError(f"An edge vector must be 1-D, got shape {w.shape}")
    found = node_count(w.size)
    if m is not None and found != m:
        raise GraphValidationError(f"Edge vector of length {w.size} does not describe {m} nodes")
    if not np.all(np.isfinite(w)):
        raise GraphValidationError("Edge weights must be finite")
    if np.any(w < 0):
        raise GraphValidationError(f"Edge weights must be nonnegative, min is {w.min():.3e}")
    return EdgeVector(w)


def validate_adjacency(W) -> AdjacencyMatrix:
    """Check that ``W`` is square, exactly symmetric, nonnegative, with a zero diagonal."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise GraphValidationError(f"An adjacency matrix must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise GraphValidationError("Adjacency entries must be finite")
    if not np.array_equal(W, W.T):
        raise GraphValidationError("Adjacency matrix is not symmetric")
    if np.any(np.diag(W) != 0):
        raise GraphValidationError("Adjacency matrix has a nonzero diagonal")
    if np.any(W < 0):
        raise GraphValidationError("Adjacency matrix has negative entries")
    return AdjacencyMatrix(W)


def validate_laplacian(L) -> LaplacianMatrix:
    """
    Check the combinatorial Laplacian invariants.

    Off-diagonal entries must be nonpositive, rows must sum to zero up to ``1e-12 * max|L|`` and
    the smallest eigenvalue must be at least ``-1e-10 * lambda_max``.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise GraphValidationError(f"A Laplacian must be square, got shape {L.shape}")
    if not np.all(np.isfinite(L)):
        raise GraphValidationError("Laplacian entries must be finite")
    if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(np.abs(L).max(initial=0.0), 1e-300)):
        raise GraphValidationError("Laplacian is not symmetric")
    scale = np.abs(L).max(initial=0.0)
    off = L - np.diag(np.diag(L))
    if np.any(off > 1e-12 * scale):
        raise GraphValidationError("Laplacian has positive off-diagonal entries")
    if np.any(np.abs(L.sum(axis=1)) > 1e-12 * max(scale, 1e-300) * L.shape[0]):
        raise GraphValidationError("Laplacian rows do not sum to zero")
    if scale > 0:
        eigenvalues = linalg.eigvalsh(L)
        if eigenvalues[0] < -1e-10 * eigenvalues[-1]:
            raise GraphValidationError(f"Laplacian is not PSD, smallest eigenvalue {eigenvalues[0]:.3e}")
    return LaplacianMatrix(L)


def vectorform(W) -> EdgeVector:
    """
    Upper-triangular entries of an adjacency matrix in edge-vector order.

    >>> vectorform([[0, 3], [3, 0]])
    array([3.])
    """
    W = validate_adjacency(W)
    return EdgeVector(squareform(W, force="tovector", checks=False).astype(float))


def matrixform(w) -> AdjacencyMatrix:
    """Inverse of ``vectorform``: the symmetric zero-diagonal matrix holding ``w``."""
    w = validate_edge_vector(w)
    return AdjacencyMatrix(squareform(w, force="tomatrix", checks=False))


def degree_map(w, m: Optional[int] = None) -> DegreeVector:
    """
    Weighted degrees ``d = Sw = W1`` computed without forming W.

    Args:
        w: Edge vector (not validated, so the solver can call this on any edge-space iterate).
        m: Node count, recomputed from ``len(w)`` when omitted.
    """
    w = np.asarray(w, dtype=float)
    m = node_count(w.size) if m is None else m
    rows, cols = pair_indices(m)
    return DegreeVector(np.bincount(rows, weights=w, minlength=m) + np.bincount(cols, weights=w, minlength=m))


def degree_adjoint(v, m: Optional[int] = None) -> np.ndarray:
    """Adjoint of ``degree_map``: the entry of pair (i, j) is ``v[i] + v[j]``."""
    v = np.asarray(v, dtype=float)
    m = v.size if m is None else m
    if v.shape != (m,):
        raise GraphValidationError(f"Expected a node vector of length {m}, got shape {v.shape}")
    rows, cols = pair_indices(m)
    return v[rows] + v[cols]


def degree_operator_matrix(m: int) -> np.ndarray:
    """Explicit dense S of shape (m, m(m-1)/2). Only meant for checks on small graphs."""
    rows, cols = pair_indices(m)
    S = np.zeros((m, rows.size))
    edges = np.arange(rows.size)
    S[rows, edges] = 1.0
    S[cols, edges] = 1.0
    return S


def operator_norm_S(m: int) -> float:
    """Spectral norm of the degree operator, sqrt(2(m-1))."""
    if m < 2:
        raise GraphValidationError(f"The degree operator needs m >= 2, got m={m}")
    return math.sqrt(2 * (m - 1))


def laplacian_from_edges(w) -> LaplacianMatrix:
    """Combinatorial Laplacian ``L = diag(W1) - W``."""
    W = matrixform(w)
    return LaplacianMatrix(np.diag(W.sum(axis=1)) - W)


def _as_data_matrix(X) -> DataMatrix:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise GraphValidationError(f"Data must be an m x n matrix, got shape {X.shape}")
    return DataMatrix(X)


def pairwise_distances(X) -> DistanceVector:
    """
    Squared Euclidean distances between the rows of ``X``, in edge-vector order.

    ``pdist`` evaluates ``sum((a - b)**2)`` directly, so there is no cancellation from the
    expanded dot-product form.
    """
    X = _as_data_matrix(X)
    if X.shape[0] < 2:
        raise GraphValidationError(f"Need at least two rows to compute distances, got {X.shape[0]}")
    return DistanceVector(pdist(X, metric="sqeuclidean"))


def smoothness_value(X, w) -> float:
    """tr(X^T L X) for the graph ``w``; equals ``w @ pairwise_distances(X)``."""
    X = _as_data_matrix(X)
    w = validate_edge_vector(w)
    if node_count(w.size) != X.shape[0]:
        raise GraphValidationError(f"Data has {X.shape[0]} rows but the graph has {node_count(w.size)} nodes")
    L = laplacian_from_edges(w)
    return float(np.sum(X * (L @ X)))


def sparsity_absorbed_distances(z, gamma: float) -> DistanceVector:
    """
    Distances that absorb an explicit sparsity term.

    Adding ``gamma * ||W||_{1,1}`` to the smoothness term is the same as using ``z + gamma``:
    ``w @ z + gamma * w.sum() == w @ (z + gamma)``.
    """
    if gamma < 0:
        raise GraphValidationError(f"gamma must be nonnegative, got {gamma}")
    return DistanceVector(np.asarray(z, dtype=float) + gamma)


def knn_edges(z, k: int,
              weighting: Literal["binary", "gaussian"] = "binary",
              sigma: Optional[float] = None) -> EdgeVector:
    """
    Symmetrized (union) k-nearest-neighbour graph.

    Pair (i, j) is an edge when j is among the k closest nodes of i or i among those of j.
    Equal distances are broken in favour of the lower node index.

    Args:
        z: Distance vector.
        k: Neighbours per node, ``1 <= k <= m - 1``.
        weighting: ``"binary"`` for unit weights, ``"gaussian"`` for ``exp(-z / (2 sigma^2))``.
        sigma: Kernel width, required for gaussian weighting.
    """
    z = np.asarray(z, dtype=float)
    m = node_count(z.size)
    if not 1 <= k <= m - 1:
        raise GraphValidationError(f"k must be in [1, {m - 1}], got {k}")
    Z = squareform(z, checks=False)
    np.fill_diagonal(Z, np.inf)
    neighbours = np.argsort(Z, axis=1, kind="stable")[:, :k]
    mask = np.zeros((m, m), dtype=bool)
    mask[np.repeat(np.arange(m), k), neighbours.ravel()] = True
    mask |= mask.T
    rows, cols = pair_indices(m)
    present = mask[rows, cols]

    if weighting == "binary":
        return EdgeVector(present.astype(float))
    if weighting == "gaussian":
        if sigma is None or sigma <= 0:
            raise GraphValidationError("Gaussian k-NN weighting needs sigma > 0")
        return EdgeVector(np.where(present, np.exp(-z / (2.0 * sigma ** 2)), 0.0))
    raise GraphValidationError(f"Unknown weighting {weighting!r}")


def _relative_gap(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    if scale == 0:
        return 0.0
    return float(np.abs(a - b).max() / scale)


def table_identities(X, w, gamma: float = 1.0) -> Dict[str, float]:
    """
    Relative residuals of the equivalences between the Laplacian, matrix and vector spaces.

    Every value should be at rounding level (well below 1e-9) for any data ``X`` and graph ``w``.

    Returns:
        Dict[str, float]: identity name -> largest relative discrepancy between its sides.
    """
    X = _as_data_matrix(X)
    w = validate_edge_vector(w, m=X.shape[0])
    m = X.shape[0]
    W = matrixform(w)
    L = laplacian_from_edges(w)
    z = pairwise_distances(X)
    Z = squareform(z, checks=False)
    d = degree_map(w, m)
    v = X.sum(axis=1)

    residuals = {
        "smoothness": max(_relative_gap(2 * np.sum(X * (L @ X)), np.abs(W * Z).sum()),
                          _relative_gap(np.abs(W * Z).sum(), 2 * w @ z)),
        "trace": max(_relative_gap(np.trace(L), np.abs(W).sum()),
                     _relative_gap(np.abs(W).sum(), 2 * np.abs(w).sum())),
        "frobenius": _relative_gap(np.sum(W ** 2), 2 * np.sum(w ** 2)),
        "laplacian_frobenius": _relative_gap(np.sum(L ** 2), 2 * np.sum(w ** 2) + np.sum(d ** 2)),
        "degrees": max(_relative_gap(np.diag(L), W.sum(axis=1)), _relative_gap(W.sum(axis=1), d)),
        "sparsity_absorption": _relative_gap(np.sum(X * (L @ X)) + gamma * np.abs(W).sum(),
                                             0.5 * np.abs(W * (2 * gamma + Z)).sum()),
        "adjoint": _relative_gap(d @ v, w @ degree_adjoint(v, m)),
        "round_trip": float(np.abs(matrixform(vectorform(W)) - W).max(initial=0.0)),
    }
    if np.all(d > 0):
        residuals["log_degrees"] = _relative_gap(np.sum(np.log(np.diag(L))), np.sum(np.log(d)))
    logger.debug(f"Identity residuals for m={m}: {residuals}")
    return residuals
