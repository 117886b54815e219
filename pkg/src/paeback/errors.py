"""Exception types shared across the package."""


class PaebackError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PaebackError):
    """Invalid, inconsistent, or insufficient input data."""


class FitError(PaebackError):
    """Model estimation failed (singular or degenerate system)."""


class ConvergenceError(FitError):
    """An iterative solver exhausted its sweep budget."""

    def __init__(self, message: str, n_sweeps: int):
        super().__init__(message)
        self.n_sweeps = n_sweeps
