"""
Smooth Graph
~~~~~~~~~~~~

Learn sparse weighted graphs from signals that are smooth on an unknown graph, with
weighted-l1 convex models solved by primal-dual splitting, plus the synthetic evaluation
protocol (random graphs, smooth signals, grid search, metrics) that goes with them.
"""

__title__ = "smoothgraph"
__version__ = "0.1.0"
__author__ = "smoothgraph developers"
__author_email__ = "smoothgraph@users.noreply.github.com"
__license__ = "MIT"
__copyright__ = "Copyright 2024 smoothgraph developers"
__description__ = "Learning graphs from smooth signals"
__url__ = "https://github.com/smoothgraph/smoothgraph-core"
__keywords__ = [
    "graph",
    "graph learning",
    "graph signal processing",
    "laplacian",
    "primal dual",
    "proximal",
    "smoothness",
    "network inference",
]

__all__ = [
    "__title__",
    "__version__",
    "__author__",
    "__author_email__",
    "__license__",
    "__copyright__",
    "__description__",
    "__url__",
    "__keywords__",
    "get_version",
    "get_author",
    "get_description",
]


def get_version() -> str:
    """Return the version of smoothgraph."""
    return __version__


def get_author() -> str:
    """Return the author of smoothgraph."""
    return __author__


def get_description() -> str:
    """Return the description of smoothgraph."""
    return __description__


def __dir__():
    """Return a sorted list of names in this module."""
    return sorted(__all__)
