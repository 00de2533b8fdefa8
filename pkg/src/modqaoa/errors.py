"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "ModqaoaError",
    "CapacityError",
    "GenerationError",
    "EdgeNotFoundError",
    "EmptyGraphError",
    "EdgeListParseError",
    "BudgetError",
    "RadiusUndefinedError",
    "RatioUndefinedError",
    "EvaluationError",
    "ConfigError",
]


class ModqaoaError(Exception):
    """Base class for all package-specific errors."""


class CapacityError(ModqaoaError, ValueError):
    """Problem size exceeds the simulator feasibility guard."""


class GenerationError(ModqaoaError, RuntimeError):
    """Random graph generation failed; carries the last seed tried."""

    def __init__(self, message: str, last_seed: int):
        super().__init__(message)
        self.last_seed = last_seed


class EdgeNotFoundError(ModqaoaError, ValueError):
    """The named edge is not present in the graph."""


class EmptyGraphError(ModqaoaError, ValueError):
    """Operation requires a graph with at least one edge."""


class EdgeListParseError(ModqaoaError, ValueError):
    """Malformed edge-list text; carries the offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class BudgetError(ModqaoaError, ValueError):
    """Evaluation budget is too small for the requested operation."""


class RadiusUndefinedError(ModqaoaError, ValueError):
    """Critical radius is undefined for the given sample count."""


class RatioUndefinedError(ModqaoaError, ValueError):
    """Approximation ratio is undefined for a non-negative reference value."""


class EvaluationError(ModqaoaError, RuntimeError):
    """Objective callback failed mid-run; carries the history so far."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = history


class ConfigError(ModqaoaError, ValueError):
    """Experiment configuration is malformed."""
