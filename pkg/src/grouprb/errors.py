"""Exception types raised across the package.

Bad argument values raise plain :class:`ValueError`; the classes below mark
conditions that callers (notably the CLI) need to tell apart.
"""


class InfeasibleSizeError(RuntimeError):
    """A dense or exact computation was requested above its size cap."""

    def __init__(self, message: str, cap: int | None = None):
        super().__init__(message)
        self.cap = cap


class GroupTooLargeError(InfeasibleSizeError):
    """Exact enumeration of a group exceeded its cap."""


class UnsupportedSamplingError(ValueError):
    """The requested sampling mode is not available for this group."""


class NumericalInconsistencyError(ArithmeticError):
    """A quantity that must be an integer (or exact) came out off by too much."""


class NonConvergenceError(RuntimeError):
    """A random walk did not reach the requested distance within the step cap."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
