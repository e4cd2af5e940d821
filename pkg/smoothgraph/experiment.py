"""
Configuration-driven evaluation protocol on synthetic graphs.

One experiment cell is a graph family crossed with a signal filter. For every trial:

1. sample a ground-truth graph (stream ``(master_seed, trial, GRAPH_STREAM)``);
2. scale its Laplacian to unit spectral norm and draw ``n`` smooth signals;
3. add white noise (stream ``(master_seed, trial, NOISE_STREAM)``);
4. compute the pairwise distances ``z`` of the noisy rows, scaled to unit mean by default.

Each model is then run on every point of its parameter grid and evaluated against the truth:

- ``log``: log-degree model with ``alpha = 1`` over a grid of ``beta``;
- ``l2``: l2-degree model with ``s = m`` over a grid of ``alpha``;
- ``gaussian``: Gaussian kernel over a grid of ``sigma`` for the weighted errors, and the best
  thresholded kernel (thresholds at quantile levels of the weights) for the F-measure.

For each metric the grid point with the best trial-averaged value is selected independently
of the other metrics. Jobs are keyed by ``(trial, model, grid index)`` so the records do not
depend on the executor or on completion order.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import ExperimentConfigError, SolverError, ValidationError
from .formats import PathLike, read_json, write_edge_list, write_json, write_matrix_csv, write_table_csv
from .generators import GeneratedGraph, GraphModelSpec, generate
from .graph_core import laplacian_from_edges, pairwise_distances
from .metrics import DEFAULT_REL_THRESHOLD, EvaluationReport, evaluate, f_measure
from .signals import FilterSpec, add_noise, generate_smooth_matrix, normalize_laplacian_scale, spectrum
from .solvers import SolverConfig, gaussian_kernel, learn_l2_degree, scale_to_unit_alpha
from .toolkits import GRAPH_STREAM, NOISE_STREAM, resident_memory_mb, run_parallel, utc_timestamp
from .types import ExecutorKind, SelectionRule

logger = logging.getLogger(__name__)

METRICS = ("f_measure", "edge_l1", "edge_l2", "degree_l1", "degree_l2")
MAXIMIZED = {"f_measure"}
MODELS = ("log", "l2", "gaussian")
RECORD_COLUMNS = ["graph", "signal", "model", "metric", "param", "value"]

__all__ = [
    'METRICS',
    'MODELS',
    'RECORD_COLUMNS',
    'ExperimentSpec',
    'ResultRecord',
    'BestChoice',
    'TrialData',
    'parse_grid',
    'prepare_trial',
    'baseline_gaussian',
    'quantile_thresholds',
    'threshold_fmeasure_curve',
    'baseline_threshold_fmeasure',
    'select_best',
    'run_experiment',
    'records_frame',
    'results_table',
    'write_outputs',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


def parse_grid(value: Any, name: str) -> List[float]:
    """
    Read a grid given as a list of values or as ``{"logspace": [lo, hi, count]}`` /
    ``{"linspace": [lo, hi, count]}`` (``lo`` and ``hi`` are values, not exponents).
    """
    if isinstance(value, dict):
        if len(value) != 1 or next(iter(value)) not in ("logspace", "linspace"):
            raise ExperimentConfigError(f"{name}: expected {{'logspace' | 'linspace': [lo, hi, count]}}, got {value}")
        kind, bounds = next(iter(value.items()))
        if not isinstance(bounds, (list, tuple)) or len(bounds) != 3:
            raise ExperimentConfigError(f"{name}: {kind} needs [lo, hi, count], got {bounds}")
        lo, hi, count = float(bounds[0]), float(bounds[1]), int(bounds[2])
        if count < 1:
            raise ExperimentConfigError(f"{name}: grid count must be at least 1")
        if kind == "logspace":
            if lo <= 0 or hi <= 0:
                raise ExperimentConfigError(f"{name}: logspace bounds must be positive")
            return np.logspace(np.log10(lo), np.log10(hi), count).tolist()
        return np.linspace(lo, hi, count).tolist()
    if isinstance(value, (list, tuple, np.ndarray)):
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ExperimentConfigError(f"{name}: grid values must be numbers") from None
    raise ExperimentConfigError(f"{name}: a grid is a list or a logspace/linspace object, got {value!r}")


def _default_solver() -> SolverConfig:
    return SolverConfig(tol=1e-4, max_iter=100_000, track_objective=False)


@dataclass
class ExperimentSpec:
    """
    One experiment cell.

    ``graph.m`` always follows ``m``, and the graph seed is derived from ``master_seed``.

    Example:
        ```
        spec = ExperimentSpec.from_json("smoothgraph/demos/rgg_tikhonov.json")
        records = run_experiment(spec, out_dir="results")
        ```
    """
    graph: GraphModelSpec = field(default_factory=GraphModelSpec)
    filter: FilterSpec = field(default_factory=FilterSpec)
    m: int = 100
    n: int = 1000
    noise_ratio: float = 0.1
    trials: int = 20
    master_seed: int = 0
    models: List[str] = field(default_factory=lambda: list(MODELS))
    log_beta_grid: List[float] = field(default_factory=lambda: np.logspace(-3, 2, 21).tolist())
    l2_alpha_grid: List[float] = field(default_factory=lambda: np.logspace(-3, 2, 21).tolist())
    l2_s: Optional[float] = None
    sigma_grid: List[float] = field(default_factory=lambda: np.logspace(-2, 1, 25).tolist())
    threshold_levels: List[float] = field(default_factory=lambda: np.linspace(0.5, 0.995, 25).tolist())
    selection: SelectionRule = SelectionRule.MEAN
    rel_threshold: float = DEFAULT_REL_THRESHOLD
    normalize_distances: bool = True
    solver: SolverConfig = field(default_factory=_default_solver)
    name: Optional[str] = None

    def __post_init__(self):
        try:
            if isinstance(self.graph, dict):
                self.graph = GraphModelSpec.from_dict({**self.graph, "m": self.m})
            elif self.graph.m != self.m:
                self.graph = replace(self.graph, m=self.m)
            if isinstance(self.filter, dict):
                self.filter = FilterSpec.from_dict(self.filter)
            if isinstance(self.solver, dict):
                self.solver = _default_solver().replace(**self.solver)
            self.selection = SelectionRule(self.selection)
        except (ValidationError, ValueError, TypeError) as e:
            raise ExperimentConfigError(str(e)) from e

        for name in ("log_beta_grid", "l2_alpha_grid", "sigma_grid", "threshold_levels"):
            setattr(self, name, parse_grid(getattr(self, name), name))
            if not getattr(self, name):
                raise ExperimentConfigError(f"{name} must not be empty")
        if any(v < 0 for v in self.log_beta_grid):
            raise ExperimentConfigError("log_beta_grid values must be nonnegative")
        if any(v <= 0 for v in self.l2_alpha_grid + self.sigma_grid):
            raise ExperimentConfigError("l2_alpha_grid and sigma_grid values must be positive")
        if any(not 0 <= v <= 1 for v in self.threshold_levels):
            raise ExperimentConfigError("threshold_levels are quantile levels in [0, 1]")

        if self.m < 2 or self.n < 1 or self.trials < 1:
            raise ExperimentConfigError(f"Need m >= 2, n >= 1 and trials >= 1, got m={self.m}, n={self.n}, "
                                        f"trials={self.trials}")
        if self.noise_ratio < 0:
            raise ExperimentConfigError(f"noise_ratio must be nonnegative, got {self.noise_ratio}")
        if self.master_seed < 0:
            raise ExperimentConfigError(f"master_seed must be nonnegative, got {self.master_seed}")
        if not self.models or any(model not in MODELS for model in self.models):
            raise ExperimentConfigError(f"models must be a non-empty subset of {list(MODELS)}, got {self.models}")
        if self.l2_s is None:
            self.l2_s = float(self.m)
        if self.l2_s <= 0:
            raise ExperimentConfigError(f"l2_s must be positive, got {self.l2_s}")
        if not 0 <= self.rel_threshold < 1:
            raise ExperimentConfigError(f"rel_threshold must lie in [0, 1), got {self.rel_threshold}")

    @property
    def cell_name(self) -> str:
        return self.name or f"{self.graph.kind.value}_{self.filter.kind.value}"

    def to_dict(self) -> Dict[str, Any]:
        graph = self.graph.to_dict()
        graph.pop("m")
        return {
            "name": self.name,
            "graph": graph,
            "filter": self.filter.to_dict(),
            "m": self.m,
            "n": self.n,
            "noise_ratio": self.noise_ratio,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "models": list(self.models),
            "log_beta_grid": list(self.log_beta_grid),
            "l2_alpha_grid": list(self.l2_alpha_grid),
            "l2_s": self.l2_s,
            "sigma_grid": list(self.sigma_grid),
            "threshold_levels": list(self.threshold_levels),
            "selection": self.selection.value,
            "rel_threshold": self.rel_threshold,
            "normalize_distances": self.normalize_distances,
            "solver": self.solver.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ExperimentConfigError(f"Unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: PathLike) -> "ExperimentSpec":
        return cls.from_dict(read_json(path))


@dataclass
class ResultRecord:
    """
    Best value of one metric for one model in one cell.

    ``value`` is the mean of ``trial_values``; under ``SelectionRule.MEAN`` all trial values
    come from the grid point ``param``, under ``PER_TRIAL`` each trial uses its own best grid
    point (listed in ``trial_params``) and ``param`` is their median.
    """
    graph: str
    signal: str
    model: str
    metric: str
    param: float
    value: float
    trial_values: List[float] = field(default_factory=list)
    trial_params: List[float] = field(default_factory=list)
    nonconverged: int = 0

    def to_row(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in RECORD_COLUMNS}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class BestChoice(NamedTuple):
    param: float
    value: float
    report: EvaluationReport


@dataclass
class TrialData:
    """Inputs shared by all jobs of one trial."""
    trial: int
    graph: GeneratedGraph
    z: np.ndarray = field(repr=False)


@dataclass
class _Job:
    model: str
    param: float
    z: np.ndarray = field(repr=False)
    w_true: np.ndarray = field(repr=False)
    s: float
    solver: SolverConfig
    rel_threshold: float
    reference_sigma: float = 1.0


@dataclass
class _Outcome:
    values: Dict[str, float]
    converged: bool = True
    failed: bool = False


def prepare_trial(spec: ExperimentSpec, trial: int) -> TrialData:
    """Ground truth and distances of one trial; depends only on ``(spec, trial)``."""
    graph = generate(spec.graph, seed=(spec.master_seed, trial, GRAPH_STREAM))
    try:
        L = normalize_laplacian_scale(laplacian_from_edges(graph.weights))
    except ValidationError as e:
        raise ExperimentConfigError(f"Trial {trial}: cannot build signals on this graph: {e}") from e
    X = generate_smooth_matrix(spectrum(L), spec.filter, spec.n, seed=spec.master_seed, trial=trial)
    X = add_noise(X, spec.noise_ratio, seed=(spec.master_seed, trial, NOISE_STREAM))
    z = pairwise_distances(X)
    if spec.normalize_distances and z.mean() > 0:
        z = z / z.mean()
    logger.info(f"Prepared trial {trial}: {graph.edge_count} true edges, n={spec.n}")
    return TrialData(trial=trial, graph=graph, z=z)


def _reference_sigma(z: np.ndarray) -> float:
    median = float(np.median(z))
    return math.sqrt(median) if median > 0 else 1.0


def quantile_thresholds(z, sigma: float, levels: Sequence[float]) -> np.ndarray:
    """Kernel weight thresholds at the given quantile ``levels`` of the Gaussian kernel weights."""
    return np.quantile(gaussian_kernel(z, sigma), np.asarray(levels, dtype=float))


def threshold_fmeasure_curve(z, sigma: float, thresholds: Sequence[float], w_true,
                             rel_threshold: float = DEFAULT_REL_THRESHOLD) -> np.ndarray:
    """F-measure of the Gaussian kernel pattern ``w >= tau`` for every threshold ``tau``."""
    weights = gaussian_kernel(z, sigma)
    return np.array([f_measure((weights >= tau).astype(float), w_true, rel_threshold) for tau in thresholds])


def baseline_threshold_fmeasure(z, sigma: float, thresholds: Sequence[float], w_true,
                                rel_threshold: float = DEFAULT_REL_THRESHOLD) -> float:
    """Best F-measure over thresholds of the Gaussian kernel weights."""
    if len(thresholds) == 0:
        raise ValidationError("The threshold grid is empty")
    return float(threshold_fmeasure_curve(z, sigma, thresholds, w_true, rel_threshold).max())


def _is_better(metric: str, candidate: float, incumbent: float) -> bool:
    if math.isnan(candidate):
        return False
    if math.isnan(incumbent):
        return True
    return candidate > incumbent if metric in MAXIMIZED else candidate < incumbent


def baseline_gaussian(z, sigma_grid: Sequence[float], w_true,
                      rel_threshold: float = DEFAULT_REL_THRESHOLD) -> Dict[str, BestChoice]:
    """
    Evaluate the unthresholded Gaussian kernel at every ``sigma`` and keep, for each metric,
    the best sigma with its full report.
    """
    if len(sigma_grid) == 0:
        raise ValidationError("The sigma grid is empty")
    best: Dict[str, BestChoice] = {}
    for sigma in sigma_grid:
        report = evaluate(gaussian_kernel(z, sigma), w_true, rel_threshold)
        for metric in METRICS:
            value = getattr(report, metric)
            if metric not in best or _is_better(metric, value, best[metric].value):
                best[metric] = BestChoice(float(sigma), float(value), report)
    return best


def _run_job(job: _Job) -> _Outcome:
    try:
        if job.model == "threshold":
            thresholds = quantile_thresholds(job.z, job.reference_sigma, [job.param])
            curve = threshold_fmeasure_curve(job.z, job.reference_sigma, thresholds, job.w_true, job.rel_threshold)
            return _Outcome({"f_measure": float(curve[0])})
        if job.model == "gaussian":
            result_w, converged = gaussian_kernel(job.z, job.param), True
        elif job.model == "log":
            result = scale_to_unit_alpha(job.z, job.param, job.solver)
            result_w, converged = result.w, result.converged
        else:
            result = learn_l2_degree(job.z, job.param, job.s, job.solver)
            result_w, converged = result.w, result.converged
    except SolverError as e:
        logger.warning(f"Job {job.model}({job.param:.4g}) failed: {e}")
        return _Outcome({metric: math.nan for metric in METRICS}, converged=False, failed=True)
    report = evaluate(result_w, job.w_true, job.rel_threshold)
    return _Outcome({metric: getattr(report, metric) for metric in METRICS}, converged=converged)


def _grids(spec: ExperimentSpec) -> Dict[str, List[float]]:
    grids = {}
    if "log" in spec.models:
        grids["log"] = spec.log_beta_grid
    if "l2" in spec.models:
        grids["l2"] = spec.l2_alpha_grid
    if "gaussian" in spec.models:
        grids["gaussian"] = spec.sigma_grid
        grids["threshold"] = spec.threshold_levels
    return grids


def select_best(values: np.ndarray, metric: str, rule: SelectionRule = SelectionRule.MEAN) -> Tuple[np.ndarray, np.ndarray]:
    """
    Choose grid points for a trials x grid matrix of metric values.

    Returns:
        Tuple: chosen grid index per trial and the matching values. Grid points with a missing
        value in any trial are never chosen under ``SelectionRule.MEAN``.
    """
    values = np.asarray(values, dtype=float)
    sign = -1.0 if metric in MAXIMIZED else 1.0
    if rule is SelectionRule.MEAN:
        means = values.mean(axis=0)
        if np.all(np.isnan(means)):
            index = np.zeros(values.shape[0], dtype=int)
        else:
            index = np.full(values.shape[0], int(np.nanargmin(sign * means)))
    else:
        scores = np.where(np.isnan(values), np.inf, sign * values)
        index = scores.argmin(axis=1)
    return index, values[np.arange(values.shape[0]), index]


def _aggregate(spec: ExperimentSpec, grids: Dict[str, List[float]],
               outcomes: Dict[Tuple[int, str, int], _Outcome]) -> List[ResultRecord]:
    records = []
    for model in (m for m in MODELS if m in spec.models):
        for metric in METRICS:
            source = "threshold" if model == "gaussian" and metric == "f_measure" else model
            grid = grids[source]
            values = np.array([[outcomes[(t, source, g)].values[metric] for g in range(len(grid))]
                               for t in range(spec.trials)])
            nonconverged = np.array([[not outcomes[(t, source, g)].converged for g in range(len(grid))]
                                     for t in range(spec.trials)])
            index, chosen = select_best(values, metric, spec.selection)
            params = [grid[i] for i in index]
            records.append(ResultRecord(
                graph=spec.graph.kind.value,
                signal=spec.filter.kind.value,
                model=model,
                metric=metric,
                param=float(np.median(params)),
                value=float(np.mean(chosen)),
                trial_values=[float(v) for v in chosen],
                trial_params=[float(p) for p in params],
                nonconverged=int(nonconverged[np.arange(spec.trials), index].sum()),
            ))
    return records


class _PrepareTrial:
    """Picklable ``trial -> TrialData`` callable."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec

    def __call__(self, trial: int) -> TrialData:
        return prepare_trial(self.spec, trial)


def run_experiment(spec: ExperimentSpec,
                   out_dir: Optional[PathLike] = None,
                   max_workers: Optional[int] = None,
                   executor: Union[ExecutorKind, str] = ExecutorKind.THREAD) -> List[ResultRecord]:
    """
    Run every trial, model and grid point of ``spec`` and select the best value per metric.

    Args:
        spec: The experiment cell.
        out_dir: When given, outputs are written to ``out_dir / spec.cell_name``.
        max_workers: Pool size.
        executor: Serial, thread or process execution; the records are identical for all three.

    Returns:
        List[ResultRecord]: One record per (model, metric), models in ``MODELS`` order.
    """
    started = time.perf_counter()
    logger.info(f"Running {spec.cell_name}: m={spec.m}, n={spec.n}, {spec.trials} trials, models {spec.models}")
    trials = run_parallel(_PrepareTrial(spec), {t: t for t in range(spec.trials)}, max_workers, executor)

    grids = _grids(spec)
    jobs: Dict[Tuple[int, str, int], _Job] = {}
    for t, data in trials.items():
        reference_sigma = _reference_sigma(data.z)
        for model, grid in grids.items():
            for g, param in enumerate(grid):
                jobs[(t, model, g)] = _Job(model=model, param=param, z=data.z, w_true=data.graph.weights,
                                           s=spec.l2_s, solver=spec.solver, rel_threshold=spec.rel_threshold,
                                           reference_sigma=reference_sigma)
    logger.info(f"{spec.cell_name}: {len(jobs)} jobs")
    outcomes = run_parallel(_run_job, jobs, max_workers, executor)
    failed = sum(outcome.failed for outcome in outcomes.values())
    if failed:
        logger.warning(f"{spec.cell_name}: {failed} of {len(jobs)} jobs failed")

    records = _aggregate(spec, grids, outcomes)
    logger.info(f"Aggregated {spec.cell_name}: {len(records)} records")
    if out_dir is not None:
        nonconverged = {model: sum(not o.converged for key, o in outcomes.items() if key[1] == model)
                        for model in grids}
        write_outputs(Path(out_dir) / spec.cell_name, spec, records, list(trials.values()),
                      nonconverged=nonconverged, wall_time=time.perf_counter() - started)
    return records


def records_frame(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """Long table with columns ``graph,signal,model,metric,param,value``."""
    return pd.DataFrame([record.to_row() for record in records], columns=RECORD_COLUMNS)


def results_table(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """Metric rows x model columns of the selected values."""
    frame = records_frame(records)
    table = frame.pivot(index="metric", columns="model", values="value")
    models = [model for model in MODELS if model in table.columns]
    metrics = [metric for metric in METRICS if metric in table.index]
    return table.loc[metrics, models]


def write_outputs(cell_dir: PathLike, spec: ExperimentSpec, records: Sequence[ResultRecord],
                  trials: Sequence[TrialData], nonconverged: Optional[Dict[str, int]] = None,
                  wall_time: Optional[float] = None) -> Path:
    """Write config.json, records.csv, table.csv, summary.json and the per-trial ground truths."""
    cell_dir = Path(cell_dir)
    cell_dir.mkdir(parents=True, exist_ok=True)
    write_json(cell_dir / "config.json", spec.to_dict())
    write_table_csv(cell_dir / "records.csv", records_frame(records))
    write_table_csv(cell_dir / "table.csv", results_table(records), index=True)
    for data in trials:
        write_edge_list(cell_dir / "trials" / f"trial_{data.trial:03d}_truth.edges", data.graph.weights)
        if data.graph.coords is not None:
            write_matrix_csv(cell_dir / "trials" / f"trial_{data.trial:03d}_coords.csv", data.graph.coords)
    write_json(cell_dir / "summary.json", {
        "cell": spec.cell_name,
        "finished_at": utc_timestamp(),
        "wall_time_s": wall_time,
        "resident_memory_mb": resident_memory_mb(),
        "nonconverged": nonconverged or {},
        "records": [record.to_dict() for record in records],
    })
    logger.info(f"Wrote results of {spec.cell_name} to {cell_dir}")
    return cell_dir
