"""
Module for utility functions, decorators, and context managers used across smoothgraph.

Key functionalities:
- Seeding: Derive independent, reproducible random streams from integer keys
  (``numpy.random.SeedSequence`` feeding the PCG64 bit generator).
- Decorators: ``monitor`` logs execution time and failures of a function.
- Context Managers: ``log_level`` temporarily changes the level of a logger.
- Worker pools: ``run_parallel`` executes a keyed job set serially, on threads or on processes,
  and returns the results keyed like the input so aggregation never depends on completion order.
- Environment probes: UTC timestamps (pytz), resident memory and physical core count (psutil).

Example:
    ```
    rng = make_rng(7, 0, SIGNAL_STREAM)

    @monitor
    def solve():
        pass
    ```
"""

from __future__ import annotations

import contextlib
import functools
import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor, as_completed
from datetime import datetime
from typing import Any, Callable, ContextManager, Dict, Hashable, Mapping, Optional, TypeVar, Union

import numpy as np
import psutil
import pytz

from .exceptions import ValidationError
from .types import ExecutorKind

T = TypeVar("T")
K = TypeVar("K", bound=Hashable)

logger = logging.getLogger(__name__)

# Stream identifiers appended to seed keys so that graphs, signals and noise of one trial
# never share a random stream.
GRAPH_STREAM = 0
SIGNAL_STREAM = 1
NOISE_STREAM = 2

__all__ = [
    # Seeding
    'GRAPH_STREAM',
    'SIGNAL_STREAM',
    'NOISE_STREAM',
    'derive_seed',
    'make_rng',
    'seed_to_int',

    # Decorators
    'monitor',

    # Context Managers
    'log_level',

    # Worker pools
    'default_workers',
    'run_parallel',

    # Environment probes
    'utc_timestamp',
    'resident_memory_mb',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


def _as_keys(seed: Union[int, tuple, list, np.random.SeedSequence]) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    keys = []
    for key in seed:
        if not isinstance(key, (int, np.integer)) or key < 0:
            raise ValidationError(f"Seed keys must be nonnegative integers, got {key!r}")
        keys.append(int(key))
    return keys


def derive_seed(*keys: Union[int, tuple]) -> np.random.SeedSequence:
    """
    Build a SeedSequence from nonnegative integer keys.

    ``derive_seed(master, trial, stream)`` is the hash(seed, trial, stream) used throughout the
    package; tuples are flattened so ``derive_seed((7, 1), 2) == derive_seed(7, 1, 2)``.

    Args:
        *keys: Integers or tuples of integers.

    Returns:
        np.random.SeedSequence: The entropy source for the stream.

    Raises:
        ValidationError: If no key is given or a key is negative or not an integer.
    """
    flat = []
    for key in keys:
        flat.extend(_as_keys(key))
    if not flat:
        raise ValidationError("At least one seed key is required")
    if any(k < 0 for k in flat):
        raise ValidationError(f"Seed keys must be nonnegative, got {flat}")
    return np.random.SeedSequence(flat)


def make_rng(*keys: Union[int, tuple]) -> np.random.Generator:
    """Return a PCG64 generator seeded from ``derive_seed(*keys)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(*keys)))


def seed_to_int(*keys: Union[int, tuple]) -> int:
    """Collapse seed keys to one 32-bit integer, for libraries that only accept an int seed."""
    return int(derive_seed(*keys).generate_state(1, dtype=np.uint32)[0])


def monitor(func: Callable[..., T]) -> Callable[..., T]:
    """
    Monitors and logs function execution time and status.

    Args:
        func: The function to be monitored

    Returns:
        Callable: Decorated function with monitoring capabilities
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
            elapsed_time = time.perf_counter() - start_time
            logger.info(f"Function {func.__name__} executed successfully in {elapsed_time:.4f} seconds.")
            return result
        except Exception as e:
            elapsed_time = time.perf_counter() - start_time
            logger.error(f"Function {func.__name__} failed after {elapsed_time:.4f} seconds with error: {e}")
            raise

    return wrapper


@contextlib.contextmanager
def log_level(level: int, name: str) -> ContextManager[logging.Logger]:
    """
    Temporarily changes the logging level of a logger within a context.

    Args:
        level (int): The logging level to set.
        name (str): The name of the logger.
    Yields:
        logging.Logger: The logger with the temporarily changed level.
    """
    target = logging.getLogger(name)
    old_level = target.level
    target.setLevel(level)
    try:
        yield target
    finally:
        target.setLevel(old_level)


def default_workers() -> int:
    """Number of physical cores, falling back to logical cores and then to one."""
    return psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1


def _make_executor(kind: ExecutorKind, max_workers: int) -> Executor:
    if kind is ExecutorKind.PROCESS:
        return ProcessPoolExecutor(max_workers=max_workers)
    return ThreadPoolExecutor(max_workers=max_workers)


def run_parallel(func: Callable[[Any], T],
                 jobs: Mapping[K, Any],
                 max_workers: Optional[int] = None,
                 executor: Union[ExecutorKind, str] = ExecutorKind.THREAD) -> Dict[K, T]:
    """
    Execute ``func(payload)`` for every ``key -> payload`` of ``jobs``.

    The returned dict follows the key order of ``jobs`` whatever the completion order, so that
    serial, threaded and process execution give identical outputs for deterministic ``func``.
    With ``ExecutorKind.PROCESS`` both ``func`` and the payloads must be picklable.

    Args:
        func: Callable applied to each payload.
        jobs: Mapping from a hashable key to the payload.
        max_workers: Pool size; defaults to ``default_workers()``.
        executor: Serial, thread or process execution.

    Returns:
        Dict: ``key -> func(payload)``.

    Raises:
        ValidationError: If ``max_workers`` is given and smaller than one.
    """
    if max_workers is not None and max_workers < 1:
        raise ValidationError(f"max_workers must be at least 1, got {max_workers}")
    kind = ExecutorKind(executor)
    if kind is ExecutorKind.SERIAL or len(jobs) <= 1:
        return {key: func(payload) for key, payload in jobs.items()}

    workers = max_workers or default_workers()
    collected: Dict[K, T] = {}
    with _make_executor(kind, workers) as pool:
        future_to_key = {pool.submit(func, payload): key for key, payload in jobs.items()}
        for future in as_completed(future_to_key):
            key = future_to_key[future]
            try:
                collected[key] = future.result()
            except Exception as exc:
                logger.error(f"Job {key!r} generated an exception: {exc}")
                raise
    return {key: collected[key] for key in jobs}


def utc_timestamp() -> str:
    """Current time in UTC, ISO 8601."""
    return datetime.now(pytz.utc).isoformat()


def resident_memory_mb() -> float:
    """Resident set size of the current process in MiB."""
    return psutil.Process().memory_info().rss / (1024 * 1024)
