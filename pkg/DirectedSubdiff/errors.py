"""
Exception types shared by the DirectedSubdiff modules.
"""
from typing import Optional


class DirSubError(ValueError):
    """Base class for all domain errors; exit_code is what the CLI returns."""
    exit_code: int = 3


class ExprParseError(DirSubError):
    """Syntax error or variable index out of range in an expression string."""
    exit_code = 1

    def __init__(self, message: str, position: Optional[int] = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class EvaluationError(DirSubError):
    """Division by zero or a non-finite value while evaluating or differentiating."""
    exit_code = 2

    def __init__(self, message: str, location: Optional[str] = None):
        if location:
            message = f"{message} [{location}]"
        super().__init__(message)
        self.location = location


class DimensionError(DirSubError):
    """Arity, dimension or grid mismatch."""
    exit_code = 3


class NotPolyhedralError(DirSubError):
    """Expression is not a nonnegative combination / max of affine atoms."""
    exit_code = 3


class SerializationError(DirSubError):
    """Malformed JSON document."""
    exit_code = 3


class InconsistentInputError(DirSubError):
    """Route inputs that should describe the same function disagree."""
    exit_code = 4
