"""
Text formats for graphs, data matrices, configurations and results.

Edge list (graphs and distance vectors)::

    m=4
    0,1,1.0000000000000000e+00
    2,3,5.0000000000000000e-01

The header gives the node count; each line is ``i,j,value`` with ``i < j`` and 0-indexed nodes.
Pairs that are not listed are zero. Values are written with 17 significant digits, so a
written vector reads back bit for bit.

Dense matrices (data, coordinates) are CSV files, one matrix row per line, ``%.17g``.
"""

from __future__ import annotations

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from .exceptions import FormatError
from .graph_core import edge_count, node_count

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

__all__ = [
    'write_edge_list',
    'read_edge_list',
    'write_matrix_csv',
    'read_matrix_csv',
    'write_json',
    'read_json',
    'write_table_csv',
]


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)


def _pair_index(i: int, j: int, m: int) -> int:
    return i * m - i * (i + 1) // 2 + (j - i - 1)


def write_edge_list(path: PathLike, w, keep_zeros: bool = False) -> Path:
    """
    Write an edge or distance vector as an edge list.

    Args:
        path: Destination file.
        w: Vector in edge order.
        keep_zeros: Also write zero entries (used for distance vectors).
    """
    path = Path(path)
    w = np.asarray(w, dtype=float)
    m = node_count(w.size)
    rows, cols = np.triu_indices(m, k=1)
    keep = np.ones(w.size, dtype=bool) if keep_zeros else w != 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"m={m}\n")
        for i, j, value in zip(rows[keep], cols[keep], w[keep]):
            f.write(f"{i},{j},{value:.16e}\n")
    logger.debug(f"Wrote {np.count_nonzero(keep)} entries on {m} nodes to {path}")
    return path


def read_edge_list(path: PathLike) -> np.ndarray:
    """
    Read an edge list into a vector in edge order.

    Raises:
        FormatError: On a missing header, a malformed line, an out-of-range or repeated pair, or
            a negative or non-finite value.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e}") from e

    lines = [line.strip() for line in lines if line.strip()]
    if not lines or not lines[0].startswith("m="):
        raise FormatError(f"{path}: expected a 'm=<count>' header")
    try:
        m = int(lines[0][2:])
    except ValueError:
        raise FormatError(f"{path}: invalid node count {lines[0][2:]!r}") from None
    if m < 1:
        raise FormatError(f"{path}: node count must be positive, got {m}")

    w = np.zeros(edge_count(m))
    seen = set()
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"{path}:{number}: expected 'i,j,value', got {line!r}")
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError(f"{path}:{number}: cannot parse {line!r}") from None
        if not 0 <= i < j < m:
            raise FormatError(f"{path}:{number}: pair ({i}, {j}) is not i < j < {m}")
        if not math.isfinite(value) or value < 0:
            raise FormatError(f"{path}:{number}: value must be finite and nonnegative, got {value}")
        if (i, j) in seen:
            raise FormatError(f"{path}:{number}: pair ({i}, {j}) listed twice")
        seen.add((i, j))
        w[_pair_index(i, j, m)] = value
    return w


def write_matrix_csv(path: PathLike, X) -> Path:
    """Write a dense matrix as CSV (rows are nodes)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.atleast_2d(np.asarray(X, dtype=float)), fmt="%.17g", delimiter=",")
    return path


def read_matrix_csv(path: PathLike) -> np.ndarray:
    """
    Read a dense CSV matrix; a single column gives an m x 1 matrix.

    Raises:
        FormatError: If the file is unreadable, ragged or holds non-numeric cells.
    """
    path = Path(path)
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise FormatError(f"Cannot read matrix from {path}: {e}") from e
    if not np.all(np.isfinite(X)):
        raise FormatError(f"{path}: matrix holds non-finite values")
    return X


def _json_default(obj: Any) -> Any:
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    """Write a JSON document; enums, paths and numpy values are converted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, default=_json_default)
        f.write("\n")
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    """
    Read a JSON object.

    Raises:
        FormatError: If the file is unreadable, not JSON, or not an object.
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object, got {type(data).__name__}")
    return data


def write_table_csv(path: PathLike, frame: pd.DataFrame, index: bool = False) -> Path:
    """Write a pandas table with full float precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format="%.17g")
    return path
