from __future__ import annotations


class SmoothGraphError(Exception):
    """Base class for every error raised by smoothgraph."""
    pass


class ValidationError(SmoothGraphError, ValueError):
    """Raised when an input value, shape or flag is invalid."""
    pass


class SolverError(SmoothGraphError):
    """Base exception for runtime solver failures."""
    pass


class ExperimentError(SmoothGraphError):
    """Base exception for runtime failures of the experiment harness."""
    pass


# Subclasses of ValidationError
class GraphValidationError(ValidationError):
    """Raised when an edge vector, adjacency or Laplacian breaks its invariants."""
    pass


class FilterSpecError(ValidationError):
    """Raised when a graph filter specification is invalid."""
    pass


class GraphModelSpecError(ValidationError):
    """Raised when a random graph model specification is invalid."""
    pass


class SolverConfigError(ValidationError):
    """Raised when solver parameters are out of range."""
    pass


class ExperimentConfigError(ValidationError):
    """Raised when an experiment configuration cannot be used."""
    pass


class FormatError(ValidationError):
    """Raised when a file does not follow the expected text format."""
    pass


# Subclasses of SolverError
class NonFiniteIterateError(SolverError):
    """Raised when an iterate stops being finite."""

    def __init__(self, iteration: int, variable: str):
        self.iteration = iteration
        self.variable = variable
        super().__init__(f"Non-finite value in '{variable}' at iteration {iteration}")
