"""Exception hierarchy shared by the toolkit."""


class BlockFramesError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BlockFramesError, ValueError):
    """Invalid arguments or an object that breaks its invariants."""


class InfeasibleError(BlockFramesError):
    """A requested exhaustive computation exceeds its size cap."""

    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class NumericalError(BlockFramesError, ArithmeticError):
    """Eigensolver failure or a numerically impossible intermediate value."""
