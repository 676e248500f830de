"""Exception types shared across the package."""


class FrontierError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FrontierError):
    """A run configuration failed to parse or validate."""


class DomainError(FrontierError):
    """An argument lies outside the domain an operation is defined on."""


class HypothesisError(FrontierError):
    """The model violates a structural hypothesis required by an operation."""

    def __init__(self, message, code=None, location=None):
        super().__init__(message)
        self.code = code
        self.location = location


class InvariantViolation(FrontierError):
    """A discrete step broke a structural invariant beyond tolerance."""


class NonConvergenceError(FrontierError):
    """An iterative solve hit its budget before reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ResolutionError(FrontierError):
    """A grid is too coarse for the requested diffusion scale."""

    def __init__(self, message, required_nodes=None):
        super().__init__(message)
        self.required_nodes = required_nodes


class StructureError(FrontierError):
    """A computed state lacks the structure an operation assumes."""


class DomainTooSmallError(FrontierError):
    """A truncated line domain clipped the structure it was meant to contain."""
