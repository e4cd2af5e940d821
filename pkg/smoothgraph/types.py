"""
Type aliases and kind enumerations shared by every smoothgraph module.

Arrays are plain ``numpy.ndarray`` objects; the aliases below only name which space an array
lives in, the way the rest of the package talks about them:

- ``EdgeVector``: nonnegative edge weights of length m(m-1)/2 in row-major upper-triangular order.
- ``DistanceVector``: squared pairwise distances in the same order as ``EdgeVector``.
- ``DegreeVector``: weighted node degrees, length m.
- ``AdjacencyMatrix``, ``LaplacianMatrix``: dense m x m views derived from an ``EdgeVector``.
- ``DataMatrix``: m x n matrix whose rows live on the nodes.

The enumerations carry string values so that configurations round-trip through JSON with
``Kind(value)``.
"""

from __future__ import annotations

from enum import Enum
from typing import NewType, Union

import numpy as np

__all__ = [
    # Array aliases
    'EdgeVector',  # Edge weights in vector form
    'DistanceVector',  # Squared distances in vector form
    'DegreeVector',  # Weighted node degrees
    'AdjacencyMatrix',  # Dense symmetric weight matrix
    'LaplacianMatrix',  # Dense combinatorial Laplacian
    'DataMatrix',  # Signals, rows = nodes
    'SeedKey',  # Integer or tuple of integers used as a seed

    # Kinds
    'FilterKind',  # Graph filter families
    'GraphKind',  # Ground-truth random graph families
    'ModelKind',  # Graph learning models
    'ExecutorKind',  # Worker pool flavours
    'SelectionRule',  # Grid-search selection rules
]

EdgeVector = NewType('EdgeVector', np.ndarray)
DistanceVector = NewType('DistanceVector', np.ndarray)
DegreeVector = NewType('DegreeVector', np.ndarray)
AdjacencyMatrix = NewType('AdjacencyMatrix', np.ndarray)
LaplacianMatrix = NewType('LaplacianMatrix', np.ndarray)
DataMatrix = NewType('DataMatrix', np.ndarray)

SeedKey = Union[int, tuple[int, ...]]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


class FilterKind(Enum):
    """Spectral filter families used to generate smooth signals."""
    TIKHONOV = "tikhonov"
    GENERATIVE = "generative"
    HEAT = "heat"
    IDENTITY = "identity"


class GraphKind(Enum):
    """Ground-truth random graph families."""
    RGG = "rgg"
    NON_UNIFORM = "nonuniform"
    ERDOS_RENYI = "erdos_renyi"
    BARABASI_ALBERT = "barabasi_albert"


class ModelKind(Enum):
    """Graph construction and learning models."""
    LOG_DEGREE = "log"
    L2_DEGREE = "l2"
    GAUSSIAN = "gaussian"
    KNN = "knn"


class ExecutorKind(Enum):
    """How independent jobs are executed."""
    SERIAL = "serial"
    THREAD = "thread"
    PROCESS = "process"


class SelectionRule(Enum):
    """How the best grid point is chosen for a metric."""
    MEAN = "mean"  # average over trials, then pick the best grid point
    PER_TRIAL = "per_trial"  # best grid point per trial, then average


