"""
Graph learning models and the primal-dual solver behind them.

All models work in edge-vector space. With ``z`` the pairwise squared distances:

- Log-degree model: minimize ``2 w.z - alpha * sum(log(Sw)) + beta * ||w||^2`` over ``w >= 0``.
  The log barrier keeps every node degree strictly positive, so no node is left isolated.
- l2-degree model: minimize ``2 w.z + alpha * (2 ||w||^2 + ||Sw||^2)`` over ``w >= 0`` with the
  total weight fixed, ``2 * sum(w) = s``.
- Gaussian kernel: the closed form ``w = exp(-z / (2 sigma^2))``, a dense graph.
- k-nearest neighbours: delegated to ``graph_core.knn_edges``.

The two convex models are solved with forward-backward-forward (FBF) primal-dual splitting of
``f1(w) + f2(Kw) + f3(w)``:

- ``f1(w) = 1{w >= 0} + 2 w.z``, handled by ``prox_weighted_l1_nonneg``;
- ``f2`` acts on ``Kw`` (``K = S`` for the log model, ``K = 2 * 1^T`` for the l2 model) and is
  handled through the proximal operator of its conjugate;
- ``f3`` is smooth with a ``zeta``-Lipschitz gradient.

Note that ``beta`` multiplies ``||w||^2`` of the edge vector; the matrix-form penalty
``beta' * ||W||_F^2`` corresponds to ``beta = 2 * beta'``.

The iteration runs from ``w = 0`` with duals ``d = 1`` (log model) or ``c = s`` (l2 model), and
stops when the relative change of the primal and of the dual iterate are both below ``tol``.
A solve that reaches ``max_iter`` returns with ``converged=False``; a non-finite iterate raises
``NonFiniteIterateError``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
from scipy.special import xlogy

from .exceptions import NonFiniteIterateError, SolverConfigError, ValidationError
from .graph_core import degree_adjoint, degree_map, knn_edges, node_count, operator_norm_S
from .types import DegreeVector, DistanceVector, EdgeVector, ModelKind

logger = logging.getLogger(__name__)

STEP_SAFETY = 0.99

__all__ = [
    # Configuration and results
    'SolverConfig',
    'SolverResult',

    # Proximal operators and smooth parts
    'prox_weighted_l1_nonneg',
    'prox_log_barrier',
    'prox_conjugate_log_barrier',
    'smooth_gradient',
    'lipschitz_constant',
    'coupling_norm',
    'default_step_size',

    # Models
    'learn_log_degree',
    'learn_l2_degree',
    'gaussian_kernel',
    'scale_to_unit_alpha',
    'learn',

    # Evaluation helpers
    'objective_value',
    'normalize_scale',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


@dataclass
class SolverConfig:
    """
    Model parameters and iteration controls.

    Attributes:
        alpha: Log-barrier weight (log model) or degree-penalty weight (l2 model).
        beta: Weight of ``||w||^2`` in the log model.
        s: Total weight ``||W||_{1,1}`` imposed by the l2 model.
        gamma: Step size; ``None`` selects ``default_step_size``.
        tol: Relative change threshold of the stopping rule.
        max_iter: Iteration cap.
        lipschitz: Lipschitz constant of the smooth part; ``None`` selects ``lipschitz_constant``.
        track_objective: Record the objective at every iteration.
        log_every: Emit a DEBUG line every ``log_every`` iterations (0 disables).
        sigma: Gaussian kernel width (gaussian model, optional weighting of k-NN).
        k: Neighbours per node (k-NN model).
    """
    alpha: float = 1.0
    beta: float = 1.0
    s: float = 1.0
    gamma: Optional[float] = None
    tol: float = 1e-4
    max_iter: int = 100_000
    lipschitz: Optional[float] = None
    track_objective: bool = True
    log_every: int = 0
    sigma: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 0:
            raise SolverConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.beta < 0:
            raise SolverConfigError(f"beta must be nonnegative, got {self.beta}")
        if self.s <= 0:
            raise SolverConfigError(f"s must be positive, got {self.s}")
        if self.gamma is not None and self.gamma <= 0:
            raise SolverConfigError(f"gamma must be positive, got {self.gamma}")
        if self.tol <= 0:
            raise SolverConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise SolverConfigError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise SolverConfigError(f"lipschitz must be nonnegative, got {self.lipschitz}")
        if self.log_every < 0:
            raise SolverConfigError(f"log_every must be nonnegative, got {self.log_every}")
        if self.sigma is not None and self.sigma <= 0:
            raise SolverConfigError(f"sigma must be positive, got {self.sigma}")
        if self.k is not None and self.k < 1:
            raise SolverConfigError(f"k must be at least 1, got {self.k}")

    def replace(self, **changes) -> "SolverConfig":
        """Copy with some fields changed (validated again)."""
        return SolverConfig(**{**asdict(self), **changes})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SolverConfigError(f"Unknown solver keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SolverResult:
    """
    Outcome of one graph learning run.

    ``d`` is the dual iterate of the log model and ``c`` the scalar dual of the l2 model; the
    node degrees of the solution are in ``degrees``.
    """
    model: ModelKind
    w: EdgeVector = field(repr=False)
    degrees: DegreeVector = field(repr=False)
    iterations: int = 0
    converged: bool = True
    final_objective: float = math.nan
    gamma: Optional[float] = None
    d: Optional[np.ndarray] = field(default=None, repr=False)
    c: Optional[float] = None
    objective_trace: List[float] = field(default_factory=list, repr=False)
    rel_change_trace: List[float] = field(default_factory=list, repr=False)

    def summary(self) -> Dict[str, Any]:
        """JSON-ready scalars."""
        return {
            "model": self.model.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_objective": self.final_objective,
            "gamma": self.gamma,
        }


def prox_weighted_l1_nonneg(y, z, gamma: float) -> np.ndarray:
    """Proximal operator of ``gamma * (1{w >= 0} + 2 w.z)``: ``max(0, y - 2 gamma z)``."""
    return np.maximum(0.0, np.asarray(y, dtype=float) - 2.0 * gamma * np.asarray(z, dtype=float))


def prox_log_barrier(y, alpha: float, lam: float) -> np.ndarray:
    """Proximal operator of ``-lam * alpha * sum(log(d))``: ``(y + sqrt(y^2 + 4 alpha lam)) / 2``."""
    y = np.asarray(y, dtype=float)
    return (y + np.sqrt(y * y + 4.0 * alpha * lam)) / 2.0


def prox_conjugate_log_barrier(ybar, alpha: float, gamma: float) -> np.ndarray:
    """
    Proximal operator of ``gamma`` times the conjugate of ``-alpha * sum(log(d))``.

    By the Moreau identity it equals ``ybar - gamma * prox_log_barrier(ybar / gamma, alpha, 1 / gamma)``,
    which simplifies to ``(ybar - sqrt(ybar^2 + 4 alpha gamma)) / 2``.
    """
    ybar = np.asarray(ybar, dtype=float)
    return (ybar - np.sqrt(ybar * ybar + 4.0 * alpha * gamma)) / 2.0


def smooth_gradient(model: Union[ModelKind, str], w, alpha: float = 0.0, beta: float = 0.0) -> np.ndarray:
    """
    Gradient of the smooth part ``f3``.

    Log model: ``f3 = beta ||w||^2``. l2 model: ``f3 = alpha (2 ||w||^2 + ||Sw||^2)``.
    """
    model = ModelKind(model)
    w = np.asarray(w, dtype=float)
    if model is ModelKind.LOG_DEGREE:
        return 2.0 * beta * w
    if model is ModelKind.L2_DEGREE:
        m = node_count(w.size)
        return alpha * (4.0 * w + 2.0 * degree_adjoint(degree_map(w, m), m))
    raise ValidationError(f"The {model.value} model has no smooth part")


def lipschitz_constant(model: Union[ModelKind, str], m: int, alpha: float = 0.0, beta: float = 0.0) -> float:
    """
    Lipschitz constant ``zeta`` of ``smooth_gradient``.

    For the l2 model the exact value ``4 alpha m`` is compared with ``2 alpha (m + 1)`` and the
    larger is used.
    """
    model = ModelKind(model)
    if model is ModelKind.LOG_DEGREE:
        return 2.0 * beta
    if model is ModelKind.L2_DEGREE:
        return max(2.0 * alpha * (m + 1), 4.0 * alpha * m)
    raise ValidationError(f"The {model.value} model has no smooth part")


def coupling_norm(model: Union[ModelKind, str], m: int) -> float:
    """Spectral norm of the linear map ``K`` coupling primal and dual."""
    model = ModelKind(model)
    if model is ModelKind.LOG_DEGREE:
        return operator_norm_S(m)
    if model is ModelKind.L2_DEGREE:
        return 2.0 * math.sqrt(m * (m - 1) / 2)
    raise ValidationError(f"The {model.value} model is not solved by splitting")


def default_step_size(model: Union[ModelKind, str], m: int, alpha: float = 0.0, beta: float = 0.0,
                      lipschitz: Optional[float] = None) -> float:
    """``0.99 / (zeta + ||K||)``, inside the FBF convergence range."""
    zeta = lipschitz_constant(model, m, alpha, beta) if lipschitz is None else lipschitz
    return STEP_SAFETY / (zeta + coupling_norm(model, m))


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    step = np.linalg.norm(new - old)
    scale = np.linalg.norm(old)
    return float(step / scale) if scale > 0 else float(step)


def _check_finite(iteration: int, **iterates: np.ndarray) -> None:
    for name, value in iterates.items():
        if not np.all(np.isfinite(value)):
            raise NonFiniteIterateError(iteration, name)


def _resolve_step(model: ModelKind, m: int, config: SolverConfig, alpha: float, beta: float) -> float:
    zeta = lipschitz_constant(model, m, alpha, beta) if config.lipschitz is None else config.lipschitz
    bound = 1.0 / (zeta + coupling_norm(model, m))
    if config.gamma is None:
        return STEP_SAFETY * bound
    if config.gamma >= bound:
        logger.warning(f"Step size {config.gamma:.3e} is not below 1/(zeta + ||K||) = {bound:.3e}; "
                       f"the iteration may diverge")
    return config.gamma


def _fbf(model: ModelKind,
         z: np.ndarray,
         w: np.ndarray,
         dual: np.ndarray,
         K: Callable[[np.ndarray], np.ndarray],
         K_adjoint: Callable[[np.ndarray], np.ndarray],
         gradient: Callable[[np.ndarray], np.ndarray],
         prox_dual: Callable[[np.ndarray, float], np.ndarray],
         objective: Callable[[np.ndarray], float],
         gamma: float,
         config: SolverConfig,
         dual_name: str):
    """
    Forward-backward-forward iteration.

    This is Tseng's correction in its standard form. The correction step applies
    ``K_adjoint`` to the dual prox output ``pbar``, and the primal update is ``w - y + q``.
    The variant sometimes quoted for these models instead uses ``K_adjoint(ybar)`` in the
    correction and ``p`` in the update; that variant is not the convergent scheme.

    The primal iterate itself may leave the nonnegative orthant; the returned point is the last
    output of the nonnegativity prox, which the iterate converges to.
    """
    objective_trace: List[float] = []
    rel_change_trace: List[float] = []
    converged = False
    iteration = 0
    for iteration in range(1, config.max_iter + 1):
        y = w - gamma * (gradient(w) + K_adjoint(dual))
        ybar = dual + gamma * K(w)
        p = prox_weighted_l1_nonneg(y, z, gamma)
        pbar = prox_dual(ybar, gamma)
        q = p - gamma * (gradient(p) + K_adjoint(pbar))
        qbar = pbar + gamma * K(p)

        w_new = w - y + q
        dual_new = dual - ybar + qbar
        _check_finite(iteration, w=w_new, **{dual_name: dual_new})

        change_w = _relative_change(w_new, w)
        change_dual = _relative_change(dual_new, dual)
        w, dual = w_new, dual_new
        rel_change_trace.append(max(change_w, change_dual))
        if config.track_objective:
            objective_trace.append(objective(p))
        if config.log_every and iteration % config.log_every == 0:
            current = objective_trace[-1] if config.track_objective else objective(p)
            logger.debug(f"[{model.value}] iteration {iteration}: objective {current:.6e}, "
                         f"change w {change_w:.3e}, change {dual_name} {change_dual:.3e}")
        if change_w < config.tol and change_dual < config.tol:
            converged = True
            break
    return p, dual, iteration, converged, objective_trace, rel_change_trace


def _finish(model: ModelKind, iterations: int, converged: bool, final_objective: float) -> None:
    if converged:
        logger.info(f"[{model.value}] converged in {iterations} iterations, objective {final_objective:.6e}")
    else:
        logger.warning(f"[{model.value}] did not converge within {iterations} iterations "
                       f"(objective {final_objective:.6e})")


def _as_distances(z) -> DistanceVector:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValidationError(f"Distances must be a vector, got shape {z.shape}")
    node_count(z.size)
    if z.size == 0:
        raise ValidationError("Distances describe a graph without any node pair")
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise ValidationError("Distances must be finite and nonnegative")
    return DistanceVector(z)


def learn_log_degree(z, alpha: Optional[float] = None, beta: Optional[float] = None,
                     config: Optional[SolverConfig] = None,
                     w0: Optional[np.ndarray] = None, d0: Optional[np.ndarray] = None) -> SolverResult:
    """
    Solve the log-degree model.

    Args:
        z: Pairwise squared distances.
        alpha: Log-barrier weight, > 0; defaults to ``config.alpha``.
        beta: Weight of ``||w||^2``, >= 0; defaults to ``config.beta``.
        config: Iteration controls.
        w0: Initial edge weights (zeros by default).
        d0: Initial dual iterate (ones by default).

    Returns:
        SolverResult: ``w`` with strictly positive degrees when converged.
    """
    config = config or SolverConfig()
    alpha = config.alpha if alpha is None else alpha
    beta = config.beta if beta is None else beta
    if alpha <= 0:
        raise SolverConfigError(f"The log-degree model needs alpha > 0, got {alpha}")
    if beta < 0:
        raise SolverConfigError(f"beta must be nonnegative, got {beta}")
    z = _as_distances(z)
    m = node_count(z.size)
    model = ModelKind.LOG_DEGREE
    gamma = _resolve_step(model, m, config, alpha, beta)

    w = np.zeros(z.size) if w0 is None else np.array(w0, dtype=float)
    d = np.ones(m) if d0 is None else np.array(d0, dtype=float)

    def objective(v):
        return objective_value(model, z, v, alpha=alpha, beta=beta)

    w, d, iterations, converged, objective_trace, rel_change_trace = _fbf(
        model, z, w, d,
        K=lambda v: degree_map(v, m),
        K_adjoint=lambda v: degree_adjoint(v, m),
        gradient=lambda v: 2.0 * beta * v,
        prox_dual=lambda v, step: prox_conjugate_log_barrier(v, alpha, step),
        objective=objective,
        gamma=gamma,
        config=config,
        dual_name="d",
    )
    final_objective = objective(w)
    _finish(model, iterations, converged, final_objective)
    return SolverResult(model=model, w=EdgeVector(w), degrees=degree_map(w, m), iterations=iterations,
                        converged=converged, final_objective=final_objective, gamma=gamma, d=d,
                        objective_trace=objective_trace, rel_change_trace=rel_change_trace)


def learn_l2_degree(z, alpha: Optional[float] = None, s: Optional[float] = None,
                    config: Optional[SolverConfig] = None,
                    w0: Optional[np.ndarray] = None, c0: Optional[float] = None) -> SolverResult:
    """
    Solve the l2-degree model with total weight ``||W||_{1,1} = 2 * sum(w) = s``.

    The conjugate of the equality indicator is linear, so its proximal step is ``ybar - gamma s``.

    Args:
        z: Pairwise squared distances.
        alpha: Degree penalty, >= 0; defaults to ``config.alpha``.
        s: Total weight, > 0; defaults to ``config.s``.
        config: Iteration controls.
        w0: Initial edge weights (zeros by default).
        c0: Initial scalar dual (``s`` by default).
    """
    config = config or SolverConfig()
    alpha = config.alpha if alpha is None else alpha
    s = config.s if s is None else s
    if alpha < 0:
        raise SolverConfigError(f"alpha must be nonnegative, got {alpha}")
    if s <= 0:
        raise SolverConfigError(f"The l2-degree model needs s > 0, got {s}")
    z = _as_distances(z)
    m = node_count(z.size)
    model = ModelKind.L2_DEGREE
    gamma = _resolve_step(model, m, config, alpha, 0.0)

    w = np.zeros(z.size) if w0 is None else np.array(w0, dtype=float)
    c = np.array([s if c0 is None else c0], dtype=float)

    def gradient(v):
        return alpha * (4.0 * v + 2.0 * degree_adjoint(degree_map(v, m), m))

    def objective(v):
        return objective_value(model, z, v, alpha=alpha)

    w, c, iterations, converged, objective_trace, rel_change_trace = _fbf(
        model, z, w, c,
        K=lambda v: np.array([2.0 * v.sum()]),
        K_adjoint=lambda v: 2.0 * v[0],
        gradient=gradient,
        prox_dual=lambda v, step: v - step * s,
        objective=objective,
        gamma=gamma,
        config=config,
        dual_name="c",
    )
    final_objective = objective(w)
    _finish(model, iterations, converged, final_objective)
    return SolverResult(model=model, w=EdgeVector(w), degrees=degree_map(w, m), iterations=iterations,
                        converged=converged, final_objective=final_objective, gamma=gamma, c=float(c[0]),
                        objective_trace=objective_trace, rel_change_trace=rel_change_trace)


def gaussian_kernel(z, sigma: float) -> EdgeVector:
    """``exp(-z / (2 sigma^2))``, the minimizer of ``sum(w z + 2 sigma^2 w (log w - 1))``."""
    if sigma is None or sigma <= 0:
        raise SolverConfigError(f"sigma must be positive, got {sigma}")
    return EdgeVector(np.exp(-np.asarray(z, dtype=float) / (2.0 * sigma ** 2)))


def scale_to_unit_alpha(z, beta_eff: float, config: Optional[SolverConfig] = None) -> SolverResult:
    """
    Log-degree model with ``alpha = 1``.

    The solution for ``(alpha, beta)`` is ``alpha`` times the solution for ``(1, alpha * beta)``,
    so a single parameter ``beta_eff = alpha * beta`` controls the sparsity pattern.
    """
    if beta_eff < 0:
        raise SolverConfigError(f"beta_eff must be nonnegative, got {beta_eff}")
    return learn_log_degree(z, 1.0, beta_eff, config)


def objective_value(model: Union[ModelKind, str], z, w, alpha: float = 1.0, beta: float = 0.0,
                    sigma: Optional[float] = None) -> float:
    """
    Objective of ``model`` at ``w``, in edge-vector form.

    - log: ``2 w.z - alpha sum(log(Sw)) + beta ||w||^2``, ``+inf`` unless every degree is positive.
    - l2: ``2 w.z + alpha (2 ||w||^2 + ||Sw||^2)``; the total-weight constraint is not checked.
    - gaussian: ``sum(w z + 2 sigma^2 w (log w - 1))``.

    Any negative weight gives ``+inf``.
    """
    model = ModelKind(model)
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        return math.inf
    if model is ModelKind.LOG_DEGREE:
        degrees = degree_map(w)
        if np.any(degrees <= 0):
            return math.inf
        return float(2.0 * w @ z - alpha * np.sum(np.log(degrees)) + beta * w @ w)
    if model is ModelKind.L2_DEGREE:
        degrees = degree_map(w)
        return float(2.0 * w @ z + alpha * (2.0 * w @ w + degrees @ degrees))
    if model is ModelKind.GAUSSIAN:
        if sigma is None or sigma <= 0:
            raise SolverConfigError("The gaussian objective needs sigma > 0")
        return float(np.sum(w * z + 2.0 * sigma ** 2 * (xlogy(w, w) - w)))
    raise ValidationError(f"The {model.value} model has no objective")


def normalize_scale(w, norm: int = 1) -> EdgeVector:
    """Rescale ``w`` to unit l1 or l2 norm; the zero vector is returned unchanged."""
    if norm not in (1, 2):
        raise ValidationError(f"norm must be 1 or 2, got {norm}")
    w = np.asarray(w, dtype=float)
    size = np.linalg.norm(w, ord=norm)
    return EdgeVector(w / size if size > 0 else w.copy())


def learn(z, config: SolverConfig, model: Union[ModelKind, str] = ModelKind.LOG_DEGREE) -> SolverResult:
    """
    Learn a graph from distances with any supported model.

    ``config.sigma`` is required by the gaussian model; the k-NN model needs ``config.k`` and
    uses gaussian weights when ``config.sigma`` is set, unit weights otherwise.
    """
    model = ModelKind(model)
    if model is ModelKind.LOG_DEGREE:
        return learn_log_degree(z, config=config)
    if model is ModelKind.L2_DEGREE:
        return learn_l2_degree(z, config=config)

    z = _as_distances(z)
    m = node_count(z.size)
    if model is ModelKind.GAUSSIAN:
        w = gaussian_kernel(z, config.sigma)
        final_objective = objective_value(model, z, w, sigma=config.sigma)
    else:
        if config.k is None:
            raise SolverConfigError("The knn model needs k")
        weighting = "binary" if config.sigma is None else "gaussian"
        w = knn_edges(z, config.k, weighting=weighting, sigma=config.sigma)
        final_objective = math.nan
    return SolverResult(model=model, w=w, degrees=degree_map(w, m), iterations=0, converged=True,
                        final_objective=final_objective)
