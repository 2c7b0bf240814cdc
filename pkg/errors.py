# errors.py

from typing import Optional


class VsepError(Exception):
    """Base class for solver errors."""


class GraphFormatError(VsepError, ValueError):
    """Malformed or invalid graph input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleProblemError(VsepError, ValueError):
    """No feasible separator exists for the requested bounds."""


class PreconditionError(VsepError, RuntimeError):
    """An operation was called outside its domain."""


class InvalidSeparatorError(VsepError, RuntimeError):
    """Extraction found an A-B edge or an overlap between shores."""
