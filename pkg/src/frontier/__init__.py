"""Numerical laboratory for two-species competition fronts in graded media.

The package simulates a competition reaction-diffusion pair on the unit
interval with spatially varying growth profiles, extracts the interface
separating the regions each species dominates, and cross-checks that
location against the zero of an independently computed traveling-wave
speed map.
"""

from frontier.errors import (
    ConfigError,
    DomainError,
    DomainTooSmallError,
    FrontierError,
    HypothesisError,
    InvariantViolation,
    NonConvergenceError,
    ResolutionError,
    StructureError,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "DomainTooSmallError",
    "FrontierError",
    "HypothesisError",
    "InvariantViolation",
    "NonConvergenceError",
    "ResolutionError",
    "StructureError",
]

__version__ = "0.1.0"
