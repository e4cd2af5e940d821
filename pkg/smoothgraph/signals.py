"""
Smooth graph signals obtained by spectral filtering of white noise.

A signal is smooth on a graph when its energy sits on the low graph frequencies. Filtering
``x0`` with a decaying response ``h`` gives ``y = U h(Lambda) U^T x0``. Three families are
provided, plus the identity used as a reference:

- Tikhonov ``h(l) = 1 / (1 + alpha * l)``: the solution of ``(I + alpha L) y = x0``.
- Generative ``h(l) = l^(-1/2)`` with ``h(0) = 0``: columns distributed as ``N(mean, L^+)``.
- Heat ``h(l) = exp(-t * l)``: ``x0`` diffused for a time ``t``.

Filters are meant for Laplacians scaled to a unit spectral norm (see
``normalize_laplacian_scale``), so that the default parameters mean the same thing on every
graph.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy import linalg

from .exceptions import FilterSpecError, GraphValidationError, ValidationError
from .graph_core import validate_laplacian
from .toolkits import SIGNAL_STREAM, make_rng
from .types import DataMatrix, FilterKind, LaplacianMatrix, SeedKey

logger = logging.getLogger(__name__)

DEFAULT_TIKHONOV_ALPHA = 10.0
DEFAULT_HEAT_T = 10.0
ZERO_EIGENVALUE_TOL = 1e-10

__all__ = [
    # Constants
    'DEFAULT_TIKHONOV_ALPHA',
    'DEFAULT_HEAT_T',
    'ZERO_EIGENVALUE_TOL',

    # Types
    'GraphSpectrum',
    'FilterSpec',

    # Operations
    'spectrum',
    'normalize_laplacian_scale',
    'filter_response',
    'filter_signal',
    'generate_smooth_matrix',
    'add_noise',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


@dataclass(frozen=True)
class GraphSpectrum:
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors (columns)."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> LaplacianMatrix:
        """``U diag(lambda) U^T``."""
        U = self.eigenvectors
        return LaplacianMatrix((U * self.eigenvalues) @ U.T)


@dataclass(frozen=True)
class FilterSpec:
    """
    A spectral filter family and its parameter.

    ``param`` is alpha for Tikhonov and t for Heat; it defaults to 10 for both and is ignored
    by the Generative and Identity filters.

    Example:
        ```
        FilterSpec.from_dict({"kind": "tikhonov", "param": 10})
        ```
    """
    kind: FilterKind = FilterKind.TIKHONOV
    param: Optional[float] = None

    def __post_init__(self):
        try:
            kind = FilterKind(self.kind)
        except ValueError:
            raise FilterSpecError(f"Unknown filter kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)

        param = self.param
        if kind is FilterKind.TIKHONOV and param is None:
            param = DEFAULT_TIKHONOV_ALPHA
        elif kind is FilterKind.HEAT and param is None:
            param = DEFAULT_HEAT_T
        if kind in (FilterKind.TIKHONOV, FilterKind.HEAT):
            if not np.isfinite(param) or param <= 0:
                raise FilterSpecError(f"The {kind.value} filter needs a positive parameter, got {param}")
            param = float(param)
        object.__setattr__(self, "param", param)

    def response(self, lam) -> np.ndarray:
        """h(lambda) evaluated elementwise."""
        return filter_response(self.kind, self.param, lam)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "param": self.param}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FilterSpec":
        unknown = set(data) - {"kind", "param"}
        if unknown:
            raise FilterSpecError(f"Unknown filter keys: {sorted(unknown)}")
        if "kind" not in data:
            raise FilterSpecError("A filter needs a 'kind'")
        return cls(kind=data["kind"], param=data.get("param"))


def spectrum(L) -> GraphSpectrum:
    """
    Full eigendecomposition of a combinatorial Laplacian.

    Eigenvalues within ``ZERO_EIGENVALUE_TOL`` of zero are set to exactly zero, so every
    constant mode of every connected component is recognized by the filters.

    Raises:
        GraphValidationError: If ``L`` is not a valid Laplacian.
    """
    L = validate_laplacian(L)
    eigenvalues, eigenvectors = linalg.eigh(L)
    eigenvalues[np.abs(eigenvalues) < ZERO_EIGENVALUE_TOL] = 0.0
    return GraphSpectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def normalize_laplacian_scale(L) -> LaplacianMatrix:
    """
    Scale ``L`` to a unit spectral norm.

    Raises:
        GraphValidationError: For the zero Laplacian.
    """
    L = validate_laplacian(L)
    lambda_max = linalg.eigvalsh(L)[-1]
    if lambda_max <= 0:
        raise GraphValidationError("Cannot normalize the Laplacian of an empty graph")
    return LaplacianMatrix(L / lambda_max)


def filter_response(kind: Union[FilterKind, str], param: Optional[float], lam) -> np.ndarray:
    """
    Vectorized frequency response of a filter.

    Args:
        kind: Filter family.
        param: alpha (Tikhonov) or t (Heat); ignored otherwise.
        lam: Graph frequencies.
    """
    kind = FilterKind(kind)
    lam = np.asarray(lam, dtype=float)
    if kind is FilterKind.TIKHONOV:
        return 1.0 / (1.0 + param * lam)
    if kind is FilterKind.HEAT:
        return np.exp(-param * lam)
    if kind is FilterKind.GENERATIVE:
        positive = lam > ZERO_EIGENVALUE_TOL
        safe = np.where(positive, lam, 1.0)
        return np.where(positive, 1.0 / np.sqrt(safe), 0.0)
    return np.ones_like(lam)


def filter_signal(spec: GraphSpectrum, h: FilterSpec, x0) -> np.ndarray:
    """
    Apply ``h(L)`` to a signal or to every column of a data matrix.

    Raises:
        ValidationError: If ``x0`` has a number of rows different from the node count.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != spec.m or x0.ndim > 2:
        raise ValidationError(f"Signal of shape {x0.shape} does not live on {spec.m} nodes")
    U = spec.eigenvectors
    response = h.response(spec.eigenvalues)
    coefficients = U.T @ x0
    if x0.ndim == 2:
        return U @ (response[:, None] * coefficients)
    return U @ (response * coefficients)


def generate_smooth_matrix(spec: GraphSpectrum, h: FilterSpec, n: int, seed: SeedKey,
                           trial: int = 0, mean: Union[float, np.ndarray] = 0.0) -> DataMatrix:
    """
    Draw ``n`` smooth signals, one per column.

    Column ``j`` filters a standard normal vector drawn from the PCG64 stream
    ``(seed, trial, SIGNAL_STREAM, j)``, so columns can be produced in any order or in
    parallel and still match.

    Args:
        spec: Spectrum of the (normalized) ground-truth Laplacian.
        h: Filter.
        n: Number of signals.
        seed: Master seed.
        trial: Trial index.
        mean: Scalar or per-node mean added after filtering.

    Returns:
        DataMatrix: m x n matrix.
    """
    if n < 1:
        raise ValidationError(f"Need at least one signal, got n={n}")
    x0 = np.empty((spec.m, n))
    for j in range(n):
        x0[:, j] = make_rng(seed, trial, SIGNAL_STREAM, j).standard_normal(spec.m)
    X = filter_signal(spec, h, x0)
    mean = np.asarray(mean, dtype=float)
    if mean.ndim == 1:
        mean = mean[:, None]
    logger.debug(f"Generated {n} {h.kind.value} signals on {spec.m} nodes (trial {trial})")
    return DataMatrix(X + mean)


def add_noise(X, ratio: float, seed: SeedKey) -> DataMatrix:
    """
    Add white Gaussian noise whose Frobenius norm is ``ratio * ||X||_F``.

    Raises:
        ValidationError: If ``ratio`` is negative.
    """
    if ratio < 0 or not np.isfinite(ratio):
        raise ValidationError(f"Noise ratio must be nonnegative, got {ratio}")
    X = np.asarray(X, dtype=float)
    norm_x = np.linalg.norm(X)
    if ratio == 0 or norm_x == 0:
        return DataMatrix(X.copy())
    E = make_rng(seed).standard_normal(X.shape)
    E *= ratio * norm_x / np.linalg.norm(E)
    return DataMatrix(X + E)
